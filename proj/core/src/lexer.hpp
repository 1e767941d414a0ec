#pragma once

// Shared hand-rolled tokenizer for the schema / predicate / transform /
// interp-spec text grammars.

#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>

#include "gryphon/error.hpp"
#include "gryphon/value.hpp"

namespace gryphon::detail {

enum class Tok { End, Ident, Int, Float, String, Punct };

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) { advance(); }

  Tok kind() const { return kind_; }
  const std::string& text() const { return tok_; }
  std::int64_t int_value() const { return int_; }
  double float_value() const { return float_; }

  bool at(std::string_view punct_or_ident) const {
    return (kind_ == Tok::Punct || kind_ == Tok::Ident) && tok_ == punct_or_ident;
  }

  bool accept(std::string_view s) {
    if (!at(s)) return false;
    advance();
    return true;
  }

  void expect(std::string_view s) {
    if (!accept(s)) fail("expected '" + std::string(s) + "'");
  }

  std::string expect_ident() {
    if (kind_ != Tok::Ident) fail("expected identifier");
    std::string s = tok_;
    advance();
    return s;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(errc::parse, msg + " at offset " + std::to_string(pos_) +
                                 " near '" + tok_ + "'");
  }

  void advance() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
    tok_.clear();
    if (pos_ >= text_.size()) {
      kind_ = Tok::End;
      return;
    }
    char c = text_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
        tok_ += text_[pos_++];
      }
      kind_ = Tok::Ident;
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && pos_ + 1 < text_.size() &&
         std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])))) {
      bool is_float = false;
      while (pos_ < text_.size()) {
        char d = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(d))) {
          tok_ += d;
          ++pos_;
        } else if (d == '.' || d == 'e' || d == 'E') {
          is_float = true;
          tok_ += d;
          ++pos_;
          if ((d == 'e' || d == 'E') && pos_ < text_.size() &&
              (text_[pos_] == '+' || text_[pos_] == '-')) {
            tok_ += text_[pos_++];
          }
        } else {
          break;
        }
      }
      if (is_float) {
        kind_ = Tok::Float;
        float_ = std::stod(tok_);
      } else {
        kind_ = Tok::Int;
        int_ = std::stoll(tok_);
      }
      return;
    }
    if (c == '"') {
      ++pos_;
      while (pos_ < text_.size() && text_[pos_] != '"') {
        if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) ++pos_;
        tok_ += text_[pos_++];
      }
      if (pos_ >= text_.size()) fail("unterminated string literal");
      ++pos_;
      kind_ = Tok::String;
      return;
    }
    // multi-char comparison / assignment punctuation
    static constexpr std::string_view two[] = {"<=", ">=", "!=", "==", ":="};
    for (auto t : two) {
      if (text_.substr(pos_, 2) == t) {
        tok_ = t;
        pos_ += 2;
        kind_ = Tok::Punct;
        return;
      }
    }
    tok_ = std::string(1, c);
    ++pos_;
    kind_ = Tok::Punct;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  Tok kind_ = Tok::End;
  std::string tok_;
  std::int64_t int_ = 0;
  double float_ = 0.0;
};

}  // namespace gryphon::detail
