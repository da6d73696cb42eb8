#include "ecgregen/stemmer.hpp"

#include <span>
#include <string_view>

namespace ecgregen {

namespace {

bool is_vowel(const std::string& w, size_t i) {
  switch (w[i]) {
    case 'a':
    case 'e':
    case 'i':
    case 'o':
    case 'u':
      return true;
    case 'y':
      // y counts as a vowel when preceded by a consonant.
      return i > 0 && !is_vowel(w, i - 1);
    default:
      return false;
  }
}

/// Measure m of w[0..len): number of VC sequences in [C](VC)^m[V].
int measure(const std::string& w, size_t len) {
  size_t i = 0;
  int m = 0;
  while (i < len && !is_vowel(w, i)) ++i;
  while (i < len) {
    while (i < len && is_vowel(w, i)) ++i;
    if (i >= len) break;
    while (i < len && !is_vowel(w, i)) ++i;
    ++m;
  }
  return m;
}

bool contains_vowel(const std::string& w, size_t len) {
  for (size_t i = 0; i < len; ++i) {
    if (is_vowel(w, i)) return true;
  }
  return false;
}

/// *d: w[0..len) ends with a double consonant.
bool ends_double_consonant(const std::string& w, size_t len) {
  return len >= 2 && w[len - 1] == w[len - 2] && !is_vowel(w, len - 1);
}

/// *o: w[0..len) ends consonant-vowel-consonant, final consonant not w/x/y.
bool ends_cvc(const std::string& w, size_t len) {
  if (len < 3) return false;
  char last = w[len - 1];
  return !is_vowel(w, len - 3) && is_vowel(w, len - 2) &&
         !is_vowel(w, len - 1) && last != 'w' && last != 'x' && last != 'y';
}

bool ends_with(const std::string& w, std::string_view suffix) {
  return w.size() >= suffix.size() &&
         w.compare(w.size() - suffix.size(), suffix.size(), suffix) == 0;
}

struct Rule {
  std::string_view suffix;
  std::string_view replacement;
};

/// Applies the longest matching rule of a step whose stem measure exceeds
/// min_measure. Per the algorithm, once a suffix matches, a failed condition
/// ends the step; shorter suffixes are not retried.
void apply_rules(std::string& w, std::span<const Rule> rules,
                 int min_measure) {
  const Rule* best = nullptr;
  for (const Rule& r : rules) {
    if (ends_with(w, r.suffix) &&
        (!best || r.suffix.size() > best->suffix.size())) {
      best = &r;
    }
  }
  if (!best) return;
  size_t stem_len = w.size() - best->suffix.size();
  if (measure(w, stem_len) > min_measure) {
    w.resize(stem_len);
    w.append(best->replacement);
  }
}

void step_1a(std::string& w) {
  if (ends_with(w, "sses")) {
    w.resize(w.size() - 2);
  } else if (ends_with(w, "ies")) {
    w.resize(w.size() - 2);
  } else if (ends_with(w, "ss")) {
    // keep
  } else if (ends_with(w, "s")) {
    w.pop_back();
  }
}

void step_1b(std::string& w) {
  if (ends_with(w, "eed")) {
    if (measure(w, w.size() - 3) > 0) w.pop_back();
    return;
  }
  bool stripped = false;
  if (ends_with(w, "ed") && contains_vowel(w, w.size() - 2)) {
    w.resize(w.size() - 2);
    stripped = true;
  } else if (ends_with(w, "ing") && contains_vowel(w, w.size() - 3)) {
    w.resize(w.size() - 3);
    stripped = true;
  }
  if (!stripped) return;
  if (ends_with(w, "at") || ends_with(w, "bl") || ends_with(w, "iz")) {
    w.push_back('e');
  } else if (ends_double_consonant(w, w.size())) {
    char last = w.back();
    if (last != 'l' && last != 's' && last != 'z') w.pop_back();
  } else if (measure(w, w.size()) == 1 && ends_cvc(w, w.size())) {
    w.push_back('e');
  }
}

void step_1c(std::string& w) {
  if (ends_with(w, "y") && contains_vowel(w, w.size() - 1)) {
    w.back() = 'i';
  }
}

constexpr Rule kStep2[] = {
    {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"},
    {"anci", "ance"},   {"izer", "ize"},    {"abli", "able"},
    {"alli", "al"},     {"entli", "ent"},   {"eli", "e"},
    {"ousli", "ous"},   {"ization", "ize"}, {"ation", "ate"},
    {"ator", "ate"},    {"alism", "al"},    {"iveness", "ive"},
    {"fulness", "ful"}, {"ousness", "ous"}, {"aliti", "al"},
    {"iviti", "ive"},   {"biliti", "ble"},
};

constexpr Rule kStep3[] = {
    {"icate", "ic"}, {"ative", ""}, {"alize", "al"}, {"iciti", "ic"},
    {"ical", "ic"},  {"ful", ""},   {"ness", ""},
};

constexpr Rule kStep4[] = {
    {"al", ""},    {"ance", ""}, {"ence", ""}, {"er", ""},  {"ic", ""},
    {"able", ""},  {"ible", ""}, {"ant", ""},  {"ement", ""},
    {"ment", ""},  {"ent", ""},  {"ion", ""},  {"ou", ""},  {"ism", ""},
    {"ate", ""},   {"iti", ""},  {"ous", ""},  {"ive", ""}, {"ize", ""},
};

void step_4(std::string& w) {
  const Rule* best = nullptr;
  for (const Rule& r : kStep4) {
    if (ends_with(w, r.suffix) &&
        (!best || r.suffix.size() > best->suffix.size())) {
      best = &r;
    }
  }
  if (!best) return;
  size_t stem_len = w.size() - best->suffix.size();
  if (measure(w, stem_len) <= 1) return;
  if (best->suffix == "ion") {
    // (m>1 and (*S or *T)) ION ->
    if (stem_len == 0 || (w[stem_len - 1] != 's' && w[stem_len - 1] != 't')) {
      return;
    }
  }
  w.resize(stem_len);
}

void step_5a(std::string& w) {
  if (!ends_with(w, "e")) return;
  size_t stem_len = w.size() - 1;
  int m = measure(w, stem_len);
  if (m > 1 || (m == 1 && !ends_cvc(w, stem_len))) w.pop_back();
}

void step_5b(std::string& w) {
  if (w.size() >= 2 && w.back() == 'l' && ends_double_consonant(w, w.size()) &&
      measure(w, w.size()) > 1) {
    w.pop_back();
  }
}

}  // namespace

std::string porter_stem(const std::string& word) {
  for (char c : word) {
    if (c < 'a' || c > 'z') return word;
  }
  if (word.empty()) return word;
  std::string w = word;
  step_1a(w);
  step_1b(w);
  step_1c(w);
  apply_rules(w, kStep2, 0);
  apply_rules(w, kStep3, 0);
  step_4(w);
  step_5a(w);
  step_5b(w);
  return w;
}

}  // namespace ecgregen
