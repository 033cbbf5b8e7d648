#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "privprof/ring.hpp"

namespace privprof {

// Declaration order is the canonical protocol schedule.
enum class Task : std::uint8_t {
  kAge1,
  kAge2,
  kAge3,
  kGender,
  kOpenness,
  kConscientiousness,
  kExtraversion,
  kAgreeableness,
  kNeuroticism,
};

inline constexpr std::size_t kTaskCount = 9;
inline constexpr std::array<Task, kTaskCount> kSchedule = {
    Task::kAge1,        Task::kAge2,          Task::kAge3,
    Task::kGender,      Task::kOpenness,      Task::kConscientiousness,
    Task::kExtraversion, Task::kAgreeableness, Task::kNeuroticism};

inline constexpr std::size_t kTextDim = 43;
inline constexpr std::size_t kLandmarkDim = 136;
inline constexpr std::string_view kTextSchema = "text-v1";
inline constexpr std::string_view kLandmarkSchema = "landmarks-v1";

std::string_view task_name(Task t);
Task parse_task(std::string_view s);
std::size_t task_dim(Task t);
std::string_view task_schema(Task t);
bool is_age_task(Task t);
bool is_trait_task(Task t);

struct SvmModel {
  std::string id;
  Task task = Task::kGender;
  std::string schema;
  std::size_t dim = 0;
  unsigned frac_bits = 16;
  std::string positive;  // meaning of sign(<x,a> - b) > 0
  std::string negative;
  double bias = 0;
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> stds;

  bool operator==(const SvmModel&) const = default;
};

// Shortest decimal string that parses back to exactly `v`.
std::string canonical_number(double v);

// Throws ValidationError on any inconsistency.
void validate_model(const SvmModel& m, unsigned bound_bits = 24);

// Line-based text form; render_model output is canonical.
std::string render_model(const SvmModel& m);
SvmModel parse_model(std::string_view text);
SvmModel load_model_file(const std::filesystem::path& path);
void save_model_file(const SvmModel& m, const std::filesystem::path& path);

FixedPoint model_fixed_point(const SvmModel& m, unsigned bound_bits = 24);

// (v - mean) / max(std, 1e-9), per feature.
std::vector<double> normalize_for(const SvmModel& m, std::span<const double> raw);

// Weights at scale 2^f as an n x 1 column; bias at scale 2^(2f).
Matrix encode_weights(const SvmModel& m, const Ring& ring, unsigned bound_bits = 24);
std::uint64_t encode_bias(const SvmModel& m, const Ring& ring, unsigned bound_bits = 24);
// Normalized, encoded client features as a 1 x n row.
Matrix encode_features(const SvmModel& m, std::span<const double> raw, const Ring& ring,
                       unsigned bound_bits = 24);

struct ClearScore {
  bool positive = false;  // margin > 0
  std::int64_t margin = 0;  // fixed-point integer at scale 2^(2f)
  double real_margin = 0;
};

ClearScore clear_score(const SvmModel& m, std::span<const double> raw, unsigned bound_bits = 24);

// Immutable set of models, one per task, listed in schedule order.
class ModelBank {
 public:
  ModelBank() = default;
  explicit ModelBank(std::vector<SvmModel> models);

  // Loads every *.svm file in `dir`. Throws Config when the directory is
  // missing and ValidationError on duplicate ids or tasks.
  static ModelBank load_dir(const std::filesystem::path& dir);

  const std::vector<SvmModel>& models() const { return models_; }
  bool empty() const { return models_.empty(); }
  // All nine tasks present with one shared frac_bits.
  bool complete() const;
  const SvmModel* find(Task t) const;
  std::vector<std::size_t> dims() const;

  // Public description shared with clients (no weights or bias).
  std::string catalog_json() const;
  // SHA-256 of catalog_json().
  std::array<std::uint8_t, 32> catalog_hash() const;

 private:
  std::vector<SvmModel> models_;
};

// Client-side view of a catalog: the model records without weights.
std::vector<SvmModel> parse_catalog(std::string_view json);
std::array<std::uint8_t, 32> sha256(std::span<const std::uint8_t> bytes);
std::array<std::uint8_t, 32> sha256(std::string_view text);
std::string hex(std::span<const std::uint8_t> bytes);

}  // namespace privprof
