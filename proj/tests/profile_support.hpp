#pragma once

#include <filesystem>
#include <optional>
#include <thread>

#include "privprof/error.hpp"
#include "privprof/features.hpp"
#include "privprof/model_bank.hpp"
#include "privprof/rng.hpp"
#include "privprof/session.hpp"
#include "privprof/transport.hpp"

namespace privprof::testing {

inline const std::filesystem::path kFixtureDir = std::filesystem::path(PRIVPROF_SOURCE_DIR) / "fixtures";

// Random model for `task` with weights in [-w, w] and plausible stats.
inline SvmModel random_model(Task t, Prg& rng, double w = 1.5) {
  SvmModel m;
  m.id = std::string(task_name(t)) + "-random";
  m.task = t;
  m.schema = std::string(task_schema(t));
  m.dim = task_dim(t);
  if (is_age_task(t)) {
    m.positive = rng.next_bit() ? "younger" : "older";
    m.negative = m.positive == "younger" ? "older" : "younger";
  } else if (t == Task::kGender) {
    m.positive = rng.next_bit() ? "male" : "female";
    m.negative = m.positive == "male" ? "female" : "male";
  } else {
    m.positive = "present";
    m.negative = "absent";
  }
  m.bias = (rng.next_double() - 0.5) * 2;
  for (std::size_t i = 0; i < m.dim; ++i) {
    m.weights.push_back((rng.next_double() * 2 - 1) * w);
    m.means.push_back(rng.next_double() * 100);
    m.stds.push_back(1 + rng.next_double() * 20);
  }
  return m;
}

inline ModelBank random_bank(Prg& rng) {
  std::vector<SvmModel> models;
  for (Task t : kSchedule) models.push_back(random_model(t, rng));
  return ModelBank(std::move(models));
}

// Raw inputs scattered around the models' means so that labels vary.
inline app::ClientInputs random_inputs(const ModelBank& bank, Prg& rng) {
  app::ClientInputs in;
  const SvmModel& text = *bank.find(Task::kOpenness);
  const SvmModel& face = *bank.find(Task::kGender);
  for (std::size_t i = 0; i < kTextDim; ++i) {
    in.text.push_back(text.means[i] + (rng.next_double() - 0.5) * 4 * text.stds[i]);
  }
  for (std::size_t i = 0; i < kLandmarkDim; ++i) {
    in.landmarks.push_back(face.means[i] + (rng.next_double() - 0.5) * 4 * face.stds[i]);
  }
  return in;
}

// Text sample, toy lexicons and landmark file from fixtures/.
inline app::ClientInputs fixture_inputs() {
  const auto mrc = features::MrcLexicon::load(kFixtureDir / "lexicons/mrc.tsv");
  const auto nrc = features::NrcLexicon::load(kFixtureDir / "lexicons/nrc.tsv");
  const auto emo = features::load_emoticons(std::filesystem::path(PRIVPROF_SOURCE_DIR) / "data/emoticons.txt");
  app::ClientInputs in;
  in.text = features::text_features(features::read_text_file(kFixtureDir / "sample.txt"), mrc, nrc, emo);
  in.landmarks = features::load_landmarks(kFixtureDir / "landmarks.txt");
  return in;
}

struct LocalRun {
  app::ClientReport report;
  app::ServerStats server;
  Transcript transcript;  // client side
};

// Runs client and server over an in-memory channel pair with one dealt
// session; the server runs on a second thread.
inline LocalRun run_local_profile(const ModelBank& bank, const app::ClientInputs& in, app::Mode mode,
                                  std::uint64_t seed, unsigned ell = 64,
                                  Variant variant = Variant::kBasic) {
  auto dealt = app::deal_sessions(bank, ell, variant, 1, seed);
  app::BundlePool pool;
  pool.add(0, std::move(dealt.pairs[0].bob));
  pool.check(bank);

  auto [client_ch, server_ch] = MemoryChannel::make_pair();
  LocalRun run;
  RecordingChannel rec(*client_ch, run.transcript);
  std::exception_ptr server_error;
  std::thread server([&, ch = server_ch.get()] {
    try {
      run.server = app::serve_session(*ch, bank, pool);
    } catch (...) {
      server_error = std::current_exception();
    }
  });
  app::ClientOptions opts;
  opts.mode = mode;
  if (mode != app::Mode::kClear) opts.bundle = std::move(dealt.pairs[0].alice);
  try {
    run.report = app::run_client(rec, in, std::move(opts));
  } catch (...) {
    client_ch->close();
    server.join();
    throw;
  }
  server.join();
  if (server_error) std::rethrow_exception(server_error);
  return run;
}

}  // namespace privprof::testing
