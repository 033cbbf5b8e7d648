#include "privprof/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "privprof/error.hpp"

namespace privprof::features {
namespace {

constexpr double kStdFloor = 1e-9;

bool is_letter(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }
bool is_alnum(char c) { return is_letter(c) || (c >= '0' && c <= '9'); }
bool is_punct(char c) {
  return (c >= '!' && c <= '/') || (c >= ':' && c <= '@') || (c >= '[' && c <= '`') ||
         (c >= '{' && c <= '~');
}
char fold(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

// NRC file category names in output order.
constexpr std::string_view kNrcCategories[kNrcCount] = {
    "anger", "fear", "anticipation", "trust", "surprise",
    "sadness", "joy", "disgust", "negative", "positive"};

constexpr std::string_view kMrcNames[kMrcCount] = {
    "NLET", "NPHON", "NSYL", "KF_FREQ", "KF_NCATS", "KF_NSAMP", "TL_FREQ",
    "BROWN_FREQ", "FAM", "CONC", "IMAG", "MEANC", "MEANP", "AOA"};

constexpr std::string_view kLiwcNames[kLiwcCount] = {
    "WC", "WPS", "Unique", "Sixltr", "Abbreviations", "Emoticons", "QMark",
    "Period", "Comma", "Colon", "SemiC", "Exclam", "Dash", "Quote",
    "Apostro", "Parenth", "OtherP", "AllPunc", "Interrog"};

std::vector<std::string_view> split_on(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = fold(c);
  return out;
}

std::optional<double> parse_real(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

template <typename F>
void for_each_line(std::istream& in, F&& fn) {
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line.front() == '#') continue;
    fn(std::string_view(line), n);
  }
}

std::ifstream open_lexicon(const std::filesystem::path& path, std::string_view kind) {
  std::ifstream is(path);
  if (!is) fail(Errc::kLexiconMissing, std::string(kind) + " lexicon not found: " + path.string());
  return is;
}

std::size_t count_abbreviations(std::string_view t) {
  std::size_t count = 0;
  std::size_t i = 0;
  while (i < t.size()) {
    const bool starts = is_letter(t[i]) && (i == 0 || (!is_letter(t[i - 1]) && t[i - 1] != '.'));
    if (!starts) {
      ++i;
      continue;
    }
    std::size_t j = i, pairs = 0;
    while (j + 1 < t.size() && is_letter(t[j]) && t[j + 1] == '.') {
      j += 2;
      ++pairs;
    }
    if (pairs >= 2 && (j == t.size() || !is_letter(t[j]))) {
      ++count;
      i = j;
    } else {
      i = std::max(j, i + 1);
    }
  }
  return count;
}

}  // namespace

Tokens tokenize(std::string_view text) {
  Tokens out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_letter(text[i]) && text[i] != '\'') {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && (is_letter(text[j]) || text[j] == '\'')) ++j;
    std::string_view run = text.substr(i, j - i);
    while (!run.empty() && run.front() == '\'') run.remove_prefix(1);
    while (!run.empty() && run.back() == '\'') run.remove_suffix(1);
    if (!run.empty()) out.words.push_back(lower(run));
    i = j;
  }

  std::size_t start = 0;
  auto close = [&](std::size_t end) {
    std::size_t b = start;
    while (b < end && is_space(text[b])) ++b;
    const bool has_content =
        std::any_of(text.begin() + static_cast<std::ptrdiff_t>(b),
                    text.begin() + static_cast<std::ptrdiff_t>(end), is_alnum);
    if (has_content) out.sentences.emplace_back(b, end);
    start = end;
  };
  for (std::size_t k = 0; k < text.size(); ++k) {
    const char c = text[k];
    if ((c == '.' || c == '!' || c == '?') && (k + 1 == text.size() || is_space(text[k + 1]))) {
      close(k + 1);
    }
  }
  if (start < text.size()) {
    std::size_t end = text.size();
    while (end > start && is_space(text[end - 1])) --end;
    close(end);
  }
  return out;
}

EmoticonSet parse_emoticons(std::istream& in) {
  EmoticonSet out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto t = trim(line);
    if (!t.empty() && !(t.size() > 1 && t[0] == '#' && t[1] == ' ')) out.emplace(t);
  }
  return out;
}

EmoticonSet load_emoticons(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) fail(Errc::kLexiconMissing, "emoticon list not found: " + path.string());
  return parse_emoticons(is);
}

std::vector<double> liwc_standard_features(std::string_view text, const EmoticonSet& emoticons) {
  const Tokens tok = tokenize(text);
  std::vector<double> f(kLiwcCount, 0.0);
  const double wc = static_cast<double>(tok.words.size());
  f[0] = wc;
  f[1] = wc / static_cast<double>(std::max<std::size_t>(tok.sentences.size(), 1));
  f[2] = static_cast<double>(std::unordered_set<std::string>(tok.words.begin(), tok.words.end()).size());
  for (const auto& w : tok.words) {
    if (std::count_if(w.begin(), w.end(), is_letter) > 6) f[3] += 1;
  }
  f[4] = static_cast<double>(count_abbreviations(text));

  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i && emoticons.count(std::string(text.substr(i, j - i)))) f[5] += 1;
    i = j;
  }

  for (char c : text) {
    if (!is_punct(c)) continue;
    f[17] += 1;
    switch (c) {
      case '?': f[6] += 1; break;
      case '.': f[7] += 1; break;
      case ',': f[8] += 1; break;
      case ':': f[9] += 1; break;
      case ';': f[10] += 1; break;
      case '!': f[11] += 1; break;
      case '-': f[12] += 1; break;
      case '"': f[13] += 1; break;
      case '\'': f[14] += 1; break;
      case '(': case ')': f[15] += 1; break;
      default: f[16] += 1; break;
    }
  }
  for (const auto& [b, e] : tok.sentences) {
    if (text[e - 1] == '?') f[18] += 1;
  }
  return f;
}

// ---- NRC ----

void NrcLexicon::add(const std::string& word, std::string_view category) {
  for (std::size_t k = 0; k < kNrcCount; ++k) {
    if (kNrcCategories[k] == category) {
      words_[lower(word)] |= static_cast<std::uint16_t>(1u << k);
      return;
    }
  }
  fail(Errc::kParseError, "unknown NRC category '" + std::string(category) + "'");
}

std::uint16_t NrcLexicon::lookup(const std::string& word) const {
  const auto it = words_.find(word);
  return it == words_.end() ? 0 : it->second;
}

NrcLexicon NrcLexicon::parse(std::istream& in) {
  NrcLexicon lex;
  for_each_line(in, [&](std::string_view line, std::size_t n) {
    const auto cols = split_on(line, '\t');
    if (cols.size() != 3) fail(Errc::kParseError, "NRC line " + std::to_string(n) + ": expected 3 columns");
    const auto flag = trim(cols[2]);
    if (flag != "0" && flag != "1") {
      fail(Errc::kParseError, "NRC line " + std::to_string(n) + ": flag must be 0 or 1");
    }
    if (flag == "1") lex.add(std::string(trim(cols[0])), trim(cols[1]));
  });
  return lex;
}

NrcLexicon NrcLexicon::load(const std::filesystem::path& path) {
  auto is = open_lexicon(path, "NRC");
  return parse(is);
}

// ---- MRC ----

void MrcLexicon::add(const std::string& word, const Row& row) { words_.emplace(lower(word), row); }

const MrcLexicon::Row* MrcLexicon::lookup(const std::string& word) const {
  const auto it = words_.find(word);
  return it == words_.end() ? nullptr : &it->second;
}

MrcLexicon MrcLexicon::parse(std::istream& in) {
  MrcLexicon lex;
  bool first = true;
  for_each_line(in, [&](std::string_view line, std::size_t n) {
    const auto cols = split_on(line, '\t');
    if (first && lower(trim(cols[0])) == "word") {
      first = false;
      return;
    }
    first = false;
    if (cols.size() < 2 || cols.size() > 1 + kMrcCount) {
      fail(Errc::kParseError, "MRC line " + std::to_string(n) + ": expected word and 14 columns");
    }
    Row row{};
    for (std::size_t k = 1; k < cols.size(); ++k) {
      const auto cell = trim(cols[k]);
      if (cell.empty()) continue;
      const auto v = parse_real(cell);
      if (!v) fail(Errc::kParseError, "MRC line " + std::to_string(n) + ": bad number");
      if (*v != 0) row[k - 1] = *v;
    }
    lex.add(std::string(trim(cols[0])), row);
  });
  return lex;
}

MrcLexicon MrcLexicon::load(const std::filesystem::path& path) {
  auto is = open_lexicon(path, "MRC");
  return parse(is);
}

std::vector<double> nrc_features(std::span<const std::string> tokens, const NrcLexicon& lex) {
  std::vector<double> f(kNrcCount, 0.0);
  for (const auto& t : tokens) {
    const auto mask = lex.lookup(t);
    for (std::size_t k = 0; k < kNrcCount; ++k) {
      if (mask & (1u << k)) f[k] += 1;
    }
  }
  return f;
}

std::vector<double> mrc_features(std::span<const std::string> tokens, const MrcLexicon& lex) {
  std::vector<double> sum(kMrcCount, 0.0), n(kMrcCount, 0.0);
  for (const auto& t : tokens) {
    const auto* row = lex.lookup(t);
    if (!row) continue;
    for (std::size_t k = 0; k < kMrcCount; ++k) {
      if ((*row)[k]) {
        sum[k] += *(*row)[k];
        n[k] += 1;
      }
    }
  }
  for (std::size_t k = 0; k < kMrcCount; ++k) sum[k] = n[k] > 0 ? sum[k] / n[k] : 0.0;
  return sum;
}

std::vector<double> text_features(std::string_view text, const MrcLexicon& mrc,
                                  const NrcLexicon& nrc, const EmoticonSet& emoticons) {
  const Tokens tok = tokenize(text);
  if (tok.words.empty()) fail(Errc::kEmptyText, "text contains no words");
  std::vector<double> out = mrc_features(tok.words, mrc);
  const auto n = nrc_features(tok.words, nrc);
  const auto l = liwc_standard_features(text, emoticons);
  out.insert(out.end(), n.begin(), n.end());
  out.insert(out.end(), l.begin(), l.end());
  return out;
}

// ---- landmarks ----

std::vector<double> parse_landmarks(std::string_view text) {
  std::vector<double> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && (is_space(text[i]) || text[i] == ',')) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j]) && text[j] != ',') ++j;
    if (j > i) {
      const auto v = parse_real(text.substr(i, j - i));
      if (!v) fail(Errc::kParseError, "landmark value '" + std::string(text.substr(i, j - i)) + "'");
      out.push_back(*v);
    }
    i = j;
  }
  if (out.size() != kLandmarkCount) {
    fail(Errc::kBadDimension, "expected 136 landmark values, got " + std::to_string(out.size()));
  }
  return out;
}

std::vector<double> load_landmarks(const std::filesystem::path& path) {
  return parse_landmarks(read_text_file(path));
}

std::vector<double> normalize(std::span<const double> values, std::span<const double> means,
                              std::span<const double> stds) {
  if (values.size() != means.size() || values.size() != stds.size()) {
    fail(Errc::kDimensionMismatch, "normalization stats do not match the feature vector");
  }
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = (values[i] - means[i]) / std::max(stds[i], kStdFloor);
  }
  return out;
}

const std::vector<std::string>& text_feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (auto n : kMrcNames) v.emplace_back("mrc_" + std::string(n));
    for (auto n : kNrcCategories) v.emplace_back("nrc_" + std::string(n));
    for (auto n : kLiwcNames) v.emplace_back("liwc_" + std::string(n));
    return v;
  }();
  return names;
}

const std::vector<std::string>& landmark_feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (int p = 0; p < 68; ++p) {
      v.push_back("x" + std::to_string(p));
      v.push_back("y" + std::to_string(p));
    }
    return v;
  }();
  return names;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(Errc::kIoFailure, "cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace privprof::features
