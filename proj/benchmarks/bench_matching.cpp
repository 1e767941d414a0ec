#include <benchmark/benchmark.h>

#include <random>

#include "gryphon/matching.hpp"

using namespace gryphon;

namespace {

const Schema kSchema = Schema::parse("m(a:int64, b:int64, c:int64, d:int64)");

// shared-prefix workload: equality values drawn from 64 per attribute
std::vector<Subscription> make_subs(std::mt19937_64& rng, int n) {
  std::vector<Subscription> subs;
  const char* names[] = {"a", "b", "c", "d"};
  for (int i = 0; i < n; ++i) {
    std::string text;
    for (int attr = 0; attr < 4; ++attr) {
      if (rng() % 2 == 0) continue;
      if (!text.empty()) text += " and ";
      text += std::string(names[attr]) + " == " + std::to_string(rng() % 64);
    }
    if (text.empty()) text = "true";
    for (auto& s : subscriptions_from(Predicate::parse(text, kSchema),
                                      "c" + std::to_string(i),
                                      "s" + std::to_string(i))) {
      subs.push_back(std::move(s));
    }
  }
  return subs;
}

Event make_event(std::mt19937_64& rng) {
  return validate_event(kSchema, {static_cast<std::int64_t>(rng() % 64),
                                  static_cast<std::int64_t>(rng() % 64),
                                  static_cast<std::int64_t>(rng() % 64),
                                  static_cast<std::int64_t>(rng() % 64)});
}

void BM_MatchTree(benchmark::State& state) {
  std::mt19937_64 rng(42);
  auto subs = make_subs(rng, static_cast<int>(state.range(0)));
  MatchTree tree = MatchTree::build(subs, kSchema);
  std::vector<Event> events;
  for (int i = 0; i < 1024; ++i) events.push_back(make_event(rng));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(tree.match(events[i++ % events.size()]));
  }
  state.counters["visits/event"] =
      static_cast<double>(tree.stats().node_visits) /
      static_cast<double>(state.iterations());
}
BENCHMARK(BM_MatchTree)->Arg(16)->Arg(256)->Arg(1024)->Arg(4096);

void BM_BruteForce(benchmark::State& state) {
  std::mt19937_64 rng(42);
  auto subs = make_subs(rng, static_cast<int>(state.range(0)));
  std::vector<Event> events;
  for (int i = 0; i < 1024; ++i) events.push_back(make_event(rng));
  std::size_t i = 0;
  for (auto _ : state) {
    const Event& e = events[i++ % events.size()];
    std::set<std::string> out;
    for (const auto& s : subs) {
      if (eval_conjunction(s.conjunction, e)) out.insert(s.sub_id);
    }
    benchmark::DoNotOptimize(out);
  }
}
BENCHMARK(BM_BruteForce)->Arg(16)->Arg(256)->Arg(1024)->Arg(4096);

void BM_TreeBuild(benchmark::State& state) {
  std::mt19937_64 rng(42);
  auto subs = make_subs(rng, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(MatchTree::build(subs, kSchema));
  }
}
BENCHMARK(BM_TreeBuild)->Arg(256)->Arg(4096);

}  // namespace

BENCHMARK_MAIN();
