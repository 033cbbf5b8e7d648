// privprof-dealer: trusted initializer. `deal` writes bundle files, `serve`
// hands each share out once over TCP and exits when all are delivered.

#include <optional>

#include "cli_common.hpp"
#include "privprof/model_bank.hpp"
#include "privprof/session.hpp"
#include "privprof/transport.hpp"

using namespace privprof;

int main(int argc, char** argv) {
  cli::init_logging("dealer");
  CLI::App app{"Trusted initializer for private profiling sessions"};
  cli::add_config_option(app);
  app.require_subcommand(1);

  std::string models;
  std::optional<std::uint64_t> seed;
  std::size_t sessions = 1;
  unsigned ell = 64;
  std::string variant = "basic";
  auto common = [&](CLI::App* sub) {
    sub->add_option("--models", models, "Model bank directory")->required();
    sub->add_option("--seed", seed, "Seed for reproducible dealing (default: OS randomness)");
    sub->add_option("--sessions", sessions, "Number of independent session bundles")->check(CLI::PositiveNumber);
    sub->add_option("--ell", ell, "Ring width")->check(CLI::IsMember({8, 16, 32, 64}));
    sub->add_option("--variant", variant, "Kernel variant")->check(CLI::IsMember({"basic", "optimized"}));
  };

  std::vector<std::string> out;
  auto* deal = app.add_subcommand("deal", "Write client and server bundle files");
  common(deal);
  deal->add_option("--out", out, "Client and server bundle paths")->required()->delimiter(',')->expected(2);

  std::string endpoint = "127.0.0.1:" + std::to_string(kDefaultDealerPort);
  auto* serve = app.add_subcommand("serve", "Deliver bundles over TCP, each share once");
  common(serve);
  serve->add_option("--listen", endpoint, "Address to listen on (host:port)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return cli::parse_exit(app, e);
  }

  return cli::guarded([&]() -> int {
    const ModelBank bank = ModelBank::load_dir(models);
    auto dealt = app::deal_sessions(bank, ell, parse_variant(variant), sessions, seed);
    if (*deal) {
      for (const auto& p : app::write_sessions(dealt, out[0], out[1])) std::printf("%s\n", p.c_str());
      return cli::kOk;
    }
    const auto [host, port] = parse_endpoint(endpoint, kDefaultDealerPort);
    app::DealerService service(std::move(dealt), port, host);
    spdlog::info("dealer listening on {}:{} for {} session(s)", host, service.port(), sessions);
    service.run();
    spdlog::info("all shares delivered");
    return cli::kOk;
  });
}
