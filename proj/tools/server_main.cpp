// privprof-server: holds the model bank and plays Bob in every session.

#include <csignal>

#include "cli_common.hpp"
#include "privprof/model_bank.hpp"
#include "privprof/session.hpp"
#include "privprof/transport.hpp"

using namespace privprof;

namespace {
app::Server* g_server = nullptr;
extern "C" void on_signal(int) {
  if (g_server) g_server->stop();
}
}  // namespace

int main(int argc, char** argv) {
  cli::init_logging("server");
  CLI::App app{"Model-bank server for private profiling"};
  cli::add_config_option(app);

  std::string bank_dir;
  std::vector<std::string> bundles;
  std::string dealer;
  std::size_t dealer_sessions = 1;
  std::uint16_t port = kDefaultServerPort;
  std::string bind = "127.0.0.1";
  std::size_t max_sessions = 0;
  app.add_option("--bank", bank_dir, "Model bank directory")->required();
  app.add_option("--bundle", bundles, "Server bundle file(s); the session index comes from the name")
      ->delimiter(',');
  app.add_option("--dealer", dealer, "Fetch bundles from a dealer service (host:port)")->excludes("--bundle");
  app.add_option("--dealer-sessions", dealer_sessions, "Number of sessions to fetch from the dealer");
  app.add_option("--port", port, "TCP port (0 picks a free port)");
  app.add_option("--bind", bind, "Address to bind");
  app.add_option("--max-sessions", max_sessions, "Exit after this many connections (0 = run until stopped)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return cli::parse_exit(app, e);
  }

  return cli::guarded([&]() -> int {
    const ModelBank bank = ModelBank::load_dir(bank_dir);
    if (!bank.complete()) {
      fail(Errc::kConfig, "model bank in " + bank_dir + " has " + std::to_string(bank.models().size()) +
                              " models; all nine tasks are required");
    }
    app::BundlePool pool;
    for (const auto& b : bundles) pool.add(app::bundle_index_from_path(b), RandomnessBundle::load(b));
    if (!dealer.empty()) {
      const auto [host, dport] = parse_endpoint(dealer, kDefaultDealerPort);
      for (std::uint32_t k = 0; k < dealer_sessions; ++k) {
        pool.add(k, app::fetch_bundle(host, dport, Party::kBob, k));
      }
    }
    pool.check(bank);
    if (pool.available() == 0) spdlog::warn("no bundles loaded: only clear-mode sessions can be served");

    app::Server server(bank, pool, port, bind);
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::printf("listening on %s:%u with %zu models, %zu bundle(s), ell=%u\n", bind.c_str(), server.port(),
                bank.models().size(), pool.available(), pool.ell());
    std::fflush(stdout);
    server.run(max_sessions);
    g_server = nullptr;
    spdlog::info("served {} session(s), {} failed", server.sessions_completed(), server.sessions_failed());
    return cli::kOk;
  });
}
