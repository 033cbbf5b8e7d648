#include "privprof/model_bank.hpp"

#include <sodium.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "privprof/error.hpp"
#include "privprof/features.hpp"
#include "privprof/rng.hpp"

namespace privprof {
namespace {

constexpr std::string_view kMagicLine = "privprof-svm 1";

struct TaskInfo {
  Task task;
  std::string_view name;
};

constexpr TaskInfo kTasks[] = {
    {Task::kAge1, "age1"},
    {Task::kAge2, "age2"},
    {Task::kAge3, "age3"},
    {Task::kGender, "gender"},
    {Task::kOpenness, "openness"},
    {Task::kConscientiousness, "conscientiousness"},
    {Task::kExtraversion, "extraversion"},
    {Task::kAgreeableness, "agreeableness"},
    {Task::kNeuroticism, "neuroticism"},
};

[[noreturn]] void invalid(const SvmModel& m, const std::string& what) {
  fail(Errc::kValidationError, "model '" + m.id + "': " + what);
}

bool label_pair_ok(Task t, const std::string& pos, const std::string& neg) {
  std::set<std::string> got{pos, neg};
  if (got.size() != 2) return false;
  if (is_age_task(t)) return got == std::set<std::string>{"younger", "older"};
  if (t == Task::kGender) return got == std::set<std::string>{"male", "female"};
  return got == std::set<std::string>{"present", "absent"};
}

double parse_number(std::string_view s) {
  double v = 0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end || !std::isfinite(v)) {
    fail(Errc::kParseError, "bad number '" + std::string(s) + "'");
  }
  return v;
}

std::size_t parse_count(std::string_view s) {
  std::size_t v = 0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) fail(Errc::kParseError, "bad integer '" + std::string(s) + "'");
  return v;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

void render_list(std::ostringstream& os, std::string_view key, const std::vector<double>& v) {
  os << key;
  for (double x : v) os << ' ' << canonical_number(x);
  os << '\n';
}

}  // namespace

std::string_view task_name(Task t) { return kTasks[static_cast<std::size_t>(t)].name; }

Task parse_task(std::string_view s) {
  for (const auto& info : kTasks) {
    if (info.name == s) return info.task;
  }
  fail(Errc::kParseError, "unknown task '" + std::string(s) + "'");
}

bool is_age_task(Task t) { return t == Task::kAge1 || t == Task::kAge2 || t == Task::kAge3; }
bool is_trait_task(Task t) { return !is_age_task(t) && t != Task::kGender; }

std::size_t task_dim(Task t) { return is_trait_task(t) ? kTextDim : kLandmarkDim; }

std::string_view task_schema(Task t) { return is_trait_task(t) ? kTextSchema : kLandmarkSchema; }

std::string canonical_number(double v) {
  if (v == 0) v = 0;  // fold -0
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) fail(Errc::kValidationError, "unrenderable number");
  return std::string(buf, p);
}

void validate_model(const SvmModel& m, unsigned bound_bits) {
  if (m.id.empty()) invalid(m, "empty id");
  for (char c : m.id) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') invalid(m, "id contains whitespace");
  }
  if (m.dim != kTextDim && m.dim != kLandmarkDim) {
    invalid(m, "dimension " + std::to_string(m.dim) + " (expected 43 or 136)");
  }
  if (m.dim != task_dim(m.task)) {
    invalid(m, "task " + std::string(task_name(m.task)) + " needs dimension " +
                   std::to_string(task_dim(m.task)));
  }
  if (m.schema != task_schema(m.task)) invalid(m, "schema '" + m.schema + "' does not match task");
  if (m.weights.size() != m.dim) {
    invalid(m, std::to_string(m.weights.size()) + " weights for dimension " + std::to_string(m.dim));
  }
  if (m.means.size() != m.dim || m.stds.size() != m.dim) invalid(m, "normalization stats length");
  if (m.frac_bits > bound_bits) invalid(m, "frac_bits exceeds the magnitude bound");
  if (!label_pair_ok(m.task, m.positive, m.negative)) {
    invalid(m, "labels '" + m.positive + "'/'" + m.negative + "' do not fit the task");
  }
  const double w_limit = std::ldexp(1.0, static_cast<int>(bound_bits - m.frac_bits));
  for (double w : m.weights) {
    if (!std::isfinite(w) || std::fabs(w) >= w_limit) invalid(m, "weight out of range");
  }
  if (!std::isfinite(m.bias) || std::fabs(m.bias) >= w_limit * w_limit) {
    invalid(m, "bias out of range");
  }
  for (std::size_t i = 0; i < m.dim; ++i) {
    if (!std::isfinite(m.means[i]) || !std::isfinite(m.stds[i]) || m.stds[i] < 0) {
      invalid(m, "bad normalization stats at feature " + std::to_string(i));
    }
  }
}

std::string render_model(const SvmModel& m) {
  std::ostringstream os;
  os << kMagicLine << '\n'
     << "id " << m.id << '\n'
     << "task " << task_name(m.task) << '\n'
     << "schema " << m.schema << '\n'
     << "dim " << m.dim << '\n'
     << "frac_bits " << m.frac_bits << '\n'
     << "positive " << m.positive << '\n'
     << "negative " << m.negative << '\n'
     << "bias " << canonical_number(m.bias) << '\n';
  render_list(os, "weights", m.weights);
  render_list(os, "means", m.means);
  render_list(os, "stds", m.stds);
  return os.str();
}

SvmModel parse_model(std::string_view text) {
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();

  constexpr std::string_view keys[] = {"id",       "task",     "schema", "dim",
                                       "frac_bits", "positive", "negative", "bias",
                                       "weights",  "means",    "stds"};
  if (lines.size() != 1 + std::size(keys) || lines[0] != kMagicLine) {
    fail(Errc::kParseError, "not a model file (expected '" + std::string(kMagicLine) +
                                "' and " + std::to_string(std::size(keys)) + " fields)");
  }
  std::vector<std::vector<std::string_view>> fields;
  for (std::size_t k = 0; k < std::size(keys); ++k) {
    auto toks = split_ws(lines[k + 1]);
    if (toks.empty() || toks[0] != keys[k]) {
      fail(Errc::kParseError, "line " + std::to_string(k + 2) + ": expected '" +
                                  std::string(keys[k]) + "'");
    }
    toks.erase(toks.begin());
    const bool list = k >= 8;
    if (!list && toks.size() != 1) {
      fail(Errc::kParseError, "field '" + std::string(keys[k]) + "' takes one value");
    }
    fields.push_back(std::move(toks));
  }
  SvmModel m;
  m.id = std::string(fields[0][0]);
  m.task = parse_task(fields[1][0]);
  m.schema = std::string(fields[2][0]);
  m.dim = parse_count(fields[3][0]);
  m.frac_bits = static_cast<unsigned>(parse_count(fields[4][0]));
  m.positive = std::string(fields[5][0]);
  m.negative = std::string(fields[6][0]);
  m.bias = parse_number(fields[7][0]);
  for (auto t : fields[8]) m.weights.push_back(parse_number(t));
  for (auto t : fields[9]) m.means.push_back(parse_number(t));
  for (auto t : fields[10]) m.stds.push_back(parse_number(t));
  validate_model(m);
  return m;
}

SvmModel load_model_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(Errc::kIoFailure, "cannot open model " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  try {
    return parse_model(ss.str());
  } catch (const Error& e) {
    fail(e.code(), path.filename().string() + ": " + e.what());
  }
}

void save_model_file(const SvmModel& m, const std::filesystem::path& path) {
  validate_model(m);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(Errc::kIoFailure, "cannot write " + path.string());
  os << render_model(m);
  if (!os) fail(Errc::kIoFailure, "write failed for " + path.string());
}

FixedPoint model_fixed_point(const SvmModel& m, unsigned bound_bits) {
  return FixedPoint{m.frac_bits, bound_bits};
}

std::vector<double> normalize_for(const SvmModel& m, std::span<const double> raw) {
  if (raw.size() != m.dim) {
    fail(Errc::kDimensionMismatch, "model '" + m.id + "' expects " + std::to_string(m.dim) +
                                       " features, got " + std::to_string(raw.size()));
  }
  return features::normalize(raw, m.means, m.stds);
}

Matrix encode_weights(const SvmModel& m, const Ring& ring, unsigned bound_bits) {
  const FixedPoint fp = model_fixed_point(m, bound_bits);
  Matrix a(m.dim, 1);
  for (std::size_t i = 0; i < m.dim; ++i) a.data[i] = fxp_encode(m.weights[i], fp, ring);
  return a;
}

std::uint64_t encode_bias(const SvmModel& m, const Ring& ring, unsigned bound_bits) {
  return fxp_encode(m.bias, FixedPoint{2 * m.frac_bits, 2 * bound_bits}, ring);
}

Matrix encode_features(const SvmModel& m, std::span<const double> raw, const Ring& ring,
                       unsigned bound_bits) {
  const FixedPoint fp = model_fixed_point(m, bound_bits);
  const auto norm = normalize_for(m, raw);
  Matrix x(1, m.dim);
  for (std::size_t i = 0; i < m.dim; ++i) x.data[i] = fxp_encode(norm[i], fp, ring);
  return x;
}

__extension__ using Int128 = __int128;

ClearScore clear_score(const SvmModel& m, std::span<const double> raw, unsigned bound_bits) {
  const Ring ring(64);
  const Matrix x = encode_features(m, raw, ring, bound_bits);
  const Matrix a = encode_weights(m, ring, bound_bits);
  Int128 acc = 0;
  for (std::size_t i = 0; i < m.dim; ++i) {
    acc += static_cast<Int128>(ring.to_signed(x.data[i])) * ring.to_signed(a.data[i]);
  }
  acc -= ring.to_signed(encode_bias(m, ring, bound_bits));
  if (acc > INT64_MAX || acc < INT64_MIN) fail(Errc::kOverflow, "clear margin exceeds 64 bits");

  const auto norm = normalize_for(m, raw);
  double real = -m.bias;
  for (std::size_t i = 0; i < m.dim; ++i) real += norm[i] * m.weights[i];
  return ClearScore{acc > 0, static_cast<std::int64_t>(acc), real};
}

// ---- ModelBank ----

ModelBank::ModelBank(std::vector<SvmModel> models) : models_(std::move(models)) {
  std::set<std::string> ids;
  std::set<Task> tasks;
  for (const auto& m : models_) {
    validate_model(m);
    if (!ids.insert(m.id).second) fail(Errc::kValidationError, "duplicate model id '" + m.id + "'");
    if (!tasks.insert(m.task).second) {
      fail(Errc::kValidationError, "two models for task " + std::string(task_name(m.task)));
    }
  }
  std::stable_sort(models_.begin(), models_.end(),
                   [](const SvmModel& a, const SvmModel& b) { return a.task < b.task; });
}

ModelBank ModelBank::load_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    fail(Errc::kConfig, "model bank directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".svm") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<SvmModel> models;
  for (const auto& f : files) models.push_back(load_model_file(f));
  return ModelBank(std::move(models));
}

bool ModelBank::complete() const {
  if (models_.size() != kTaskCount) return false;
  for (std::size_t i = 0; i < kTaskCount; ++i) {
    if (models_[i].task != kSchedule[i] || models_[i].frac_bits != models_[0].frac_bits) {
      return false;
    }
  }
  return true;
}

const SvmModel* ModelBank::find(Task t) const {
  for (const auto& m : models_) {
    if (m.task == t) return &m;
  }
  return nullptr;
}

std::vector<std::size_t> ModelBank::dims() const {
  std::vector<std::size_t> out;
  for (const auto& m : models_) out.push_back(m.dim);
  return out;
}

std::string ModelBank::catalog_json() const {
  nlohmann::ordered_json models = nlohmann::ordered_json::array();
  for (const auto& m : models_) {
    nlohmann::ordered_json j;
    j["id"] = m.id;
    j["task"] = task_name(m.task);
    j["dim"] = m.dim;
    j["schema"] = m.schema;
    j["frac_bits"] = m.frac_bits;
    j["positive"] = m.positive;
    j["negative"] = m.negative;
    j["means"] = m.means;
    j["stds"] = m.stds;
    j["version"] = hex(sha256(render_model(m)));
    models.push_back(std::move(j));
  }
  nlohmann::ordered_json root;
  root["models"] = std::move(models);
  return root.dump();
}

std::array<std::uint8_t, 32> ModelBank::catalog_hash() const { return sha256(catalog_json()); }

std::vector<SvmModel> parse_catalog(std::string_view json) {
  std::vector<SvmModel> out;
  try {
    const auto root = nlohmann::json::parse(json);
    for (const auto& j : root.at("models")) {
      SvmModel m;
      m.id = j.at("id").get<std::string>();
      m.task = parse_task(j.at("task").get<std::string>());
      m.dim = j.at("dim").get<std::size_t>();
      m.schema = j.at("schema").get<std::string>();
      m.frac_bits = j.at("frac_bits").get<unsigned>();
      m.positive = j.at("positive").get<std::string>();
      m.negative = j.at("negative").get<std::string>();
      m.means = j.at("means").get<std::vector<double>>();
      m.stds = j.at("stds").get<std::vector<double>>();
      m.weights.assign(m.dim, 0.0);
      validate_model(m);
      m.weights.clear();
      out.push_back(std::move(m));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::kParseError, std::string("catalog: ") + e.what());
  }
  return out;
}

std::array<std::uint8_t, 32> sha256(std::span<const std::uint8_t> bytes) {
  crypto_init();
  std::array<std::uint8_t, 32> out{};
  crypto_hash_sha256(out.data(), bytes.data(), bytes.size());
  return out;
}

std::array<std::uint8_t, 32> sha256(std::string_view text) {
  return sha256(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()),
                                              text.size()));
}

std::string hex(std::span<const std::uint8_t> bytes) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 15]);
  }
  return out;
}

}  // namespace privprof
