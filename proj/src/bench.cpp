#include "privprof/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <thread>

#include "json.hpp"
#include "privprof/error.hpp"
#include "privprof/protocols.hpp"
#include "privprof/rng.hpp"
#include "privprof/svm.hpp"

namespace privprof::bench {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

nlohmann::ordered_json latency_json(const Latency& l) {
  return {{"samples", l.samples}, {"mean_ms", l.mean_ms}, {"p50_ms", l.p50_ms},
          {"p90_ms", l.p90_ms},   {"max_ms", l.max_ms}};
}

struct RawSide {
  std::vector<RandomnessBundle> parts;
  std::vector<mpc::Session> sessions;
  std::vector<svm::SvmKernel> kernels;
};

RawSide raw_side(RandomnessBundle bundle, const SessionPlan& plan, Party party, Prg& rng) {
  RawSide s;
  s.parts = std::move(bundle).split(plan);
  s.sessions.reserve(plan.model_dims.size());
  s.kernels.reserve(plan.model_dims.size());
  for (std::size_t k = 0; k < plan.model_dims.size(); ++k) {
    const std::size_t n = plan.model_dims[k];
    s.sessions.emplace_back(plan.ring, party, s.parts[k]);
    Matrix x(1, n), a(n, 1);
    Matrix& mine = party == Party::kAlice ? x : a;
    for (auto& v : mine.data) v = plan.ring.reduce(rng.next_u64());
    s.kernels.emplace_back(plan.ring, party, std::move(x), std::move(a), plan.ring.reduce(rng.next_u64()),
                           plan.variant);
  }
  return s;
}

std::uint32_t drive(Channel& ch, RawSide& side) {
  Mux mux(ch);
  mpc::Lockstep ls(mux);
  for (std::size_t k = 0; k < side.kernels.size(); ++k) {
    ls.add(static_cast<std::uint16_t>(k + 1), side.sessions[k], side.kernels[k]);
  }
  ls.run();
  std::uint32_t rounds = 0;
  for (const auto& s : side.sessions) rounds = std::max(rounds, s.rounds());
  return rounds;
}

}  // namespace

Latency summarize(std::vector<double> ms) {
  Latency l;
  l.samples = ms.size();
  if (ms.empty()) return l;
  std::sort(ms.begin(), ms.end());
  auto rank = [&](double p) {
    const auto k = static_cast<std::size_t>(std::ceil(p * static_cast<double>(ms.size())));
    return ms[std::clamp<std::size_t>(k, 1, ms.size()) - 1];
  };
  l.mean_ms = std::accumulate(ms.begin(), ms.end(), 0.0) / static_cast<double>(ms.size());
  l.p50_ms = rank(0.5);
  l.p90_ms = rank(0.9);
  l.max_ms = ms.back();
  return l;
}

std::pair<double, std::uint32_t> time_raw_pipelines(const std::vector<std::size_t>& dims, unsigned ell,
                                                    Variant variant, std::uint64_t seed) {
  const SessionPlan plan = plan_session(dims, ell, variant);
  Prg dealer = Prg::from_u64(seed, "bench-deal", ell);
  BundlePair dealt = deal(plan, dealer);
  Prg rng_a = Prg::from_u64(seed, "bench-alice", ell);
  Prg rng_b = Prg::from_u64(seed, "bench-bob", ell);
  RawSide alice = raw_side(std::move(dealt.alice), plan, Party::kAlice, rng_a);
  RawSide bob = raw_side(std::move(dealt.bob), plan, Party::kBob, rng_b);

  TcpListener listener(0);
  std::exception_ptr err;
  std::thread server([&] {
    try {
      auto ch = listener.accept();
      if (!ch) fail(Errc::kChannelClosed, "bench listener closed");
      drive(*ch, bob);
    } catch (...) {
      err = std::current_exception();
    }
  });
  const auto t0 = Clock::now();
  std::uint32_t rounds = 0;
  try {
    auto ch = TcpChannel::connect("127.0.0.1", listener.port());
    rounds = drive(*ch, alice);
  } catch (...) {
    listener.close();
    server.join();
    throw;
  }
  server.join();
  const double elapsed = ms_since(t0);
  if (err) std::rethrow_exception(err);
  return {elapsed, rounds};
}

Report run(const ModelBank& bank, const app::ClientInputs& inputs, const Config& cfg) {
  Report r;
  r.runs = cfg.runs;
  r.variant = cfg.variant;
  if (cfg.runs == 0) return r;

  auto dealt = app::deal_sessions(bank, 64, cfg.variant, cfg.runs, cfg.seed);
  app::BundlePool pool;
  for (std::size_t k = 0; k < cfg.runs; ++k) pool.add(static_cast<std::uint32_t>(k), std::move(dealt.pairs[k].bob));
  pool.check(bank);
  app::Server server(bank, pool, 0);
  std::thread srv([&] { server.run(2 * cfg.runs); });

  std::vector<double> clear_ms, priv_ms;
  try {
    for (std::size_t k = 0; k < cfg.runs; ++k) {
      {
        const auto t0 = Clock::now();
        auto ch = TcpChannel::connect("127.0.0.1", server.port());
        app::ClientOptions opts;
        opts.mode = app::Mode::kClear;
        app::run_client(*ch, inputs, std::move(opts));
        clear_ms.push_back(ms_since(t0));
      }
      {
        const auto t0 = Clock::now();
        auto ch = TcpChannel::connect("127.0.0.1", server.port());
        app::ClientOptions opts;
        opts.mode = app::Mode::kPrivate;
        opts.bundle = std::move(dealt.pairs[k].alice);
        opts.bundle_index = static_cast<std::uint32_t>(k);
        app::run_client(*ch, inputs, std::move(opts));
        priv_ms.push_back(ms_since(t0));
      }
    }
  } catch (...) {
    server.stop();
    srv.join();
    throw;
  }
  srv.join();
  r.clear = summarize(clear_ms);
  r.priv = summarize(priv_ms);
  r.slowdown = r.clear.mean_ms > 0 ? r.priv.mean_ms / r.clear.mean_ms : 0;

  const auto dims = bank.dims();
  for (unsigned ell : cfg.sweep_ells) {
    std::vector<double> ms;
    SweepPoint pt;
    pt.ell = ell;
    for (std::size_t k = 0; k < cfg.runs; ++k) {
      auto [t, rounds] = time_raw_pipelines(dims, ell, cfg.variant, cfg.seed + k);
      ms.push_back(t);
      pt.rounds = rounds;
    }
    pt.latency = summarize(std::move(ms));
    r.sweep.push_back(pt);
  }
  return r;
}

std::string to_json(const Report& r) {
  nlohmann::ordered_json j;
  j["runs"] = r.runs;
  if (r.runs > 0) {
    j["variant"] = std::string(variant_name(r.variant));
    j["clear"] = latency_json(r.clear);
    j["private"] = latency_json(r.priv);
    j["slowdown"] = r.slowdown;
    j["reference_slowdown"] = "about 3 times slower";
    auto& sweep = j["sweep"] = nlohmann::ordered_json::array();
    for (const auto& p : r.sweep) {
      sweep.push_back({{"ell", p.ell}, {"rounds", p.rounds}, {"latency", latency_json(p.latency)}});
    }
  }
  return j.dump(2);
}

}  // namespace privprof::bench
