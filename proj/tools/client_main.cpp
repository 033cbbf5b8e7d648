// privprof-client: extracts features locally and plays Alice. `bench` runs
// clear and private profiles against an in-process loopback server.

#include <chrono>
#include <cstdlib>
#include <optional>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cli_common.hpp"
#include "json.hpp"
#include "privprof/bench.hpp"
#include "privprof/features.hpp"
#include "privprof/session.hpp"
#include "privprof/transport.hpp"

#ifndef PRIVPROF_DATA_DIR
#define PRIVPROF_DATA_DIR "data"
#endif

using namespace privprof;

namespace {

struct InputFlags {
  std::string text_path;
  std::string text_inline;
  std::string landmarks;
  std::string mrc;
  std::string nrc;
  std::string emoticons = std::string(PRIVPROF_DATA_DIR) + "/emoticons.txt";

  void add(CLI::App* app) {
    auto* t = app->add_option("--text", text_path, "Text file to profile");
    app->add_option("--text-inline", text_inline, "Text to profile, given inline")->excludes(t);
    app->add_option("--landmarks", landmarks, "File with 136 facial landmark values");
    app->add_option("--mrc", mrc, "MRC psycholinguistic lexicon (TSV)");
    app->add_option("--nrc", nrc, "NRC word-emotion lexicon (TSV)");
    app->add_option("--emoticons", emoticons, "Emoticon list");
  }

  app::ClientInputs load() const {
    if (text_path.empty() && text_inline.empty()) fail(Errc::kConfig, "one of --text or --text-inline is required");
    if (landmarks.empty() || mrc.empty() || nrc.empty()) fail(Errc::kConfig, "--landmarks, --mrc and --nrc are required");
    const std::string text = text_path.empty() ? text_inline : features::read_text_file(text_path);
    app::ClientInputs in;
    in.text = features::text_features(text, features::MrcLexicon::load(mrc), features::NrcLexicon::load(nrc),
                                      features::load_emoticons(emoticons));
    in.landmarks = features::load_landmarks(landmarks);
    return in;
  }
};

// Extraction failures exit before any connection is made: EmptyText has its
// own exit code, every other input problem shares one.
std::optional<int> load_or_exit(const InputFlags& flags, app::ClientInputs& in) {
  try {
    in = flags.load();
    return std::nullopt;
  } catch (const Error& e) {
    if (e.code() == Errc::kConfig) throw;
    spdlog::error("feature extraction: {}", e.what());
    return e.code() == Errc::kEmptyText ? cli::kEmptyText : cli::kExtraction;
  }
}

std::string yes_no(bool b) { return b ? "yes" : "no"; }

constexpr const char* kTraitNames[] = {"openness", "conscientiousness", "extraversion", "agreeableness",
                                       "neuroticism"};

nlohmann::ordered_json profile_json(const svm::ProfileResult& r) {
  nlohmann::ordered_json j;
  j["gender"] = r.gender;
  j["age"] = std::string(svm::bracket_name(r.age));
  for (std::size_t k = 0; k < 5; ++k) j[kTraitNames[k]] = r.traits[k];
  return j;
}

double ms(std::chrono::nanoseconds d) { return std::chrono::duration<double, std::milli>(d).count(); }

void print_report(const app::ClientReport& rep, app::Mode mode, bool json) {
  if (json) {
    nlohmann::ordered_json j;
    j["mode"] = std::string(app::mode_name(mode));
    if (rep.clear) j["clear"] = profile_json(*rep.clear);
    if (rep.priv) j["private"] = profile_json(*rep.priv);
    if (rep.clear) j["clear_ms"] = ms(rep.clear_stats.elapsed);
    if (rep.priv) {
      j["private_ms"] = ms(rep.private_stats.elapsed);
      j["rounds"] = rep.private_stats.rounds;
    }
    if (mode == app::Mode::kCompare) j["agree"] = rep.agree();
    j["bytes_sent"] = rep.bytes_sent;
    j["bytes_received"] = rep.bytes_received;
    std::cout << j.dump(2) << '\n';
    return;
  }
  if (mode != app::Mode::kCompare) {
    std::cout << svm::format_profile(rep.profile);
    return;
  }
  const auto& c = *rep.clear;
  const auto& p = *rep.priv;
  auto row = [](const std::string& k, const std::string& a, const std::string& b) {
    std::printf("%-18s %-10s %-10s\n", k.c_str(), a.c_str(), b.c_str());
  };
  row("", "clear", "private");
  row("gender", c.gender, p.gender);
  row("age", std::string(svm::bracket_name(c.age)), std::string(svm::bracket_name(p.age)));
  for (std::size_t k = 0; k < 5; ++k) row(kTraitNames[k], yes_no(c.traits[k]), yes_no(p.traits[k]));
  char a[32], b[32];
  std::snprintf(a, sizeof a, "%.2f", ms(rep.clear_stats.elapsed));
  std::snprintf(b, sizeof b, "%.2f", ms(rep.private_stats.elapsed));
  row("latency_ms", a, b);
  std::printf("agree: %s\n", yes_no(rep.agree()).c_str());
}

std::vector<unsigned> parse_ells(const std::vector<unsigned>& v) {
  for (unsigned e : v) {
    if (e != 8 && e != 16 && e != 32 && e != 64) fail(Errc::kConfig, "--ell values must be 8, 16, 32 or 64");
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  cli::init_logging("client");
  CLI::App app{"Private profiling client"};
  cli::add_config_option(app);
  app.require_subcommand(0, 1);

  InputFlags inputs;
  std::string server = "127.0.0.1:" + std::to_string(kDefaultServerPort);
  std::string mode_s = "private";
  std::string bundle;
  std::optional<std::uint32_t> bundle_index;
  std::string dealer;
  bool json = false;
  inputs.add(&app);
  app.add_option("--server", server, "Server address (host:port)");
  app.add_option("--mode", mode_s, "private, clear or compare");
  app.add_option("--bundle", bundle, "Client bundle file");
  app.add_option("--bundle-index", bundle_index, "Session index (default: from the bundle file name)");
  app.add_option("--dealer", dealer, "Fetch the bundle from a dealer service (host:port)")->excludes("--bundle");
  app.add_flag("--json", json, "Machine-readable output");

  auto* bench = app.add_subcommand("bench", "Clear vs private latency over loopback");
  InputFlags bench_inputs;
  std::string bank_dir;
  std::size_t runs = 20;
  std::vector<unsigned> ells;
  std::string variant = "basic";
  std::uint64_t seed = 1;
  std::string out;
  bench_inputs.add(bench);
  bench->add_option("--bank", bank_dir, "Model bank directory")->required();
  bench->add_option("--runs", runs, "Sessions per mode");
  bench->add_option("--ell", ells, "Ring widths for the kernel sweep")->delimiter(',');
  bench->add_option("--variant", variant, "Kernel variant")->check(CLI::IsMember({"basic", "optimized"}));
  bench->add_option("--seed", seed, "Dealing seed");
  bench->add_option("--out", out, "Also write the JSON report to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return cli::parse_exit(app, e);
  }

  if (*bench) {
    return cli::guarded([&]() -> int {
      bench::Config cfg;
      cfg.runs = runs;
      cfg.variant = parse_variant(variant);
      cfg.sweep_ells = parse_ells(ells);
      cfg.seed = seed;
      if (runs == 0) {
        const bench::Report empty;
        std::cout << bench::to_json(empty) << '\n';
        return cli::kOk;
      }
      const ModelBank bank = ModelBank::load_dir(bank_dir);
      app::ClientInputs in;
      if (auto rc = load_or_exit(bench_inputs, in)) return *rc;
      if (!std::getenv("SPDLOG_LEVEL")) spdlog::set_level(spdlog::level::warn);
      const auto report = bench::run(bank, in, cfg);
      const std::string text = bench::to_json(report);
      std::cout << text << '\n';
      if (!out.empty()) {
        std::ofstream os(out);
        os << text << '\n';
        if (!os) fail(Errc::kIoFailure, "cannot write " + out);
      }
      spdlog::info("slowdown private/clear = {:.2f} (reference: about 3 times slower)", report.slowdown);
      return cli::kOk;
    });
  }

  return cli::guarded([&]() -> int {
    const app::Mode mode = app::parse_mode(mode_s);
    app::ClientInputs in;
    if (auto rc = load_or_exit(inputs, in)) return *rc;
    app::ClientOptions opts;
    opts.mode = mode;
    if (mode != app::Mode::kClear) {
      if (!bundle.empty()) {
        opts.bundle = RandomnessBundle::load(bundle);
        opts.bundle_index = bundle_index.value_or(app::bundle_index_from_path(bundle));
      } else if (!dealer.empty()) {
        opts.bundle_index = bundle_index.value_or(0);
        const auto [host, port] = parse_endpoint(dealer, kDefaultDealerPort);
        opts.bundle = app::fetch_bundle(host, port, Party::kAlice, opts.bundle_index);
      } else {
        fail(Errc::kConfig, std::string(app::mode_name(mode)) + " mode needs --bundle or --dealer");
      }
    }
    const auto [host, port] = parse_endpoint(server, kDefaultServerPort);
    auto ch = TcpChannel::connect(host, port);
    const auto report = app::run_client(*ch, in, std::move(opts));
    ch->close();
    print_report(report, mode, json);
    return (mode == app::Mode::kCompare && !report.agree()) ? cli::kProtocolError : cli::kOk;
  });
}
