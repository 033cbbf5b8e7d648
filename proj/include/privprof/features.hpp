#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace privprof::features {

inline constexpr std::size_t kMrcCount = 14;
inline constexpr std::size_t kNrcCount = 10;
inline constexpr std::size_t kLiwcCount = 19;
inline constexpr std::size_t kTextCount = kMrcCount + kNrcCount + kLiwcCount;
inline constexpr std::size_t kLandmarkCount = 136;

struct Tokens {
  std::vector<std::string> words;                           // case-folded
  std::vector<std::pair<std::size_t, std::size_t>> sentences;  // byte spans [begin, end)
};

// Words are maximal runs of ASCII letters and apostrophes containing at least
// one letter, with leading/trailing apostrophes removed. A sentence ends at
// '.', '!' or '?' followed by whitespace or end of text; blank spans are not
// sentences.
Tokens tokenize(std::string_view text);

using EmoticonSet = std::unordered_set<std::string>;
EmoticonSet load_emoticons(const std::filesystem::path& path);
EmoticonSet parse_emoticons(std::istream& in);

// WC, WPS, unique, >6 letters, abbreviations, emoticons, ? . , : ; ! - " '
// parentheses, other punctuation, all punctuation, interrogative sentences.
std::vector<double> liwc_standard_features(std::string_view text, const EmoticonSet& emoticons);

class NrcLexicon {
 public:
  // Word<TAB>category<TAB>flag lines; flag 0 lines are ignored.
  static NrcLexicon load(const std::filesystem::path& path);
  static NrcLexicon parse(std::istream& in);

  void add(const std::string& word, std::string_view category);
  // Bit k set = member of output category k.
  std::uint16_t lookup(const std::string& word) const;
  std::size_t size() const { return words_.size(); }

 private:
  std::unordered_map<std::string, std::uint16_t> words_;
};

class MrcLexicon {
 public:
  using Row = std::array<std::optional<double>, kMrcCount>;

  // Word<TAB>14 columns; an empty or zero cell means the attribute is absent.
  static MrcLexicon load(const std::filesystem::path& path);
  static MrcLexicon parse(std::istream& in);

  void add(const std::string& word, const Row& row);
  const Row* lookup(const std::string& word) const;
  std::size_t size() const { return words_.size(); }

 private:
  std::unordered_map<std::string, Row> words_;
};

// Raw counts in the order anger, fear, anticipation, trust, surprise,
// sadness, joy, disgust, negative, positive.
std::vector<double> nrc_features(std::span<const std::string> tokens, const NrcLexicon& lex);
// Per attribute, the mean over tokens with that attribute (0 if none).
std::vector<double> mrc_features(std::span<const std::string> tokens, const MrcLexicon& lex);

// MRC || NRC || LIWC. Throws EmptyText if the text has no words.
std::vector<double> text_features(std::string_view text, const MrcLexicon& mrc,
                                  const NrcLexicon& nrc, const EmoticonSet& emoticons);

// 136 reals, one per line or as comma/whitespace-separated rows.
std::vector<double> parse_landmarks(std::string_view text);
std::vector<double> load_landmarks(const std::filesystem::path& path);

// (v - mean) / max(std, 1e-9).
std::vector<double> normalize(std::span<const double> values, std::span<const double> means,
                              std::span<const double> stds);

const std::vector<std::string>& text_feature_names();
const std::vector<std::string>& landmark_feature_names();

std::string read_text_file(const std::filesystem::path& path);

}  // namespace privprof::features
