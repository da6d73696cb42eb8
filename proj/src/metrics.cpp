#include "ecgregen/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <unordered_map>

#include "ecgregen/errors.hpp"
#include "ecgregen/stemmer.hpp"

namespace ecgregen {

namespace {

constexpr const char* kPunct = ".,;:!?()/-";

bool is_punct_token_char(char c) {
  for (const char* p = kPunct; *p; ++p) {
    if (*p == c) return true;
  }
  return false;
}

}  // namespace

TokenSeq tokenize(const std::string& text) {
  TokenSeq seq;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      seq.tokens.push_back(current);
      current.clear();
    }
  };
  for (char ch : text) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (c < 0x80 && std::isspace(c)) {
      flush();
    } else if (c < 0x80 && is_punct_token_char(ch)) {
      flush();
      seq.tokens.emplace_back(1, ch);
    } else {
      current.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    }
  }
  flush();
  return seq;
}

std::string normalize_answer(const std::string& s) {
  std::string out;
  bool pending_space = false;
  for (char ch : s) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (c < 0x80 && std::isspace(c)) {
      if (!out.empty()) pending_space = true;
    } else {
      if (pending_space) {
        out.push_back(' ');
        pending_space = false;
      }
      out.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// BLEU

namespace {

using NgramCounts = std::map<std::vector<std::string>, size_t>;

NgramCounts count_ngrams(const TokenSeq& seq, size_t n) {
  NgramCounts counts;
  if (seq.tokens.size() < n) return counts;
  for (size_t i = 0; i + n <= seq.tokens.size(); ++i) {
    std::vector<std::string> gram(seq.tokens.begin() + i,
                                  seq.tokens.begin() + i + n);
    ++counts[std::move(gram)];
  }
  return counts;
}

size_t clipped_matches(const NgramCounts& cand, const NgramCounts& ref) {
  size_t total = 0;
  for (const auto& [gram, count] : cand) {
    auto it = ref.find(gram);
    if (it != ref.end()) total += std::min(count, it->second);
  }
  return total;
}

void check_corpus(const std::vector<TokenSeq>& candidates,
                  const std::vector<TokenSeq>& references) {
  if (candidates.size() != references.size()) {
    throw DataError("candidate/reference count mismatch: " +
                    std::to_string(candidates.size()) + " vs " +
                    std::to_string(references.size()));
  }
  if (candidates.empty()) throw DataError("empty scoring corpus");
}

}  // namespace

double bleu(const std::vector<TokenSeq>& candidates,
            const std::vector<TokenSeq>& references, int max_n) {
  check_corpus(candidates, references);
  if (max_n < 1 || max_n > 4) throw DataError("max_n must be in 1..4");

  size_t total_cand_len = 0, total_ref_len = 0;
  std::vector<size_t> num(static_cast<size_t>(max_n), 0);
  std::vector<size_t> den(static_cast<size_t>(max_n), 0);
  for (size_t p = 0; p < candidates.size(); ++p) {
    total_cand_len += candidates[p].tokens.size();
    total_ref_len += references[p].tokens.size();
    for (int n = 1; n <= max_n; ++n) {
      NgramCounts cand = count_ngrams(candidates[p], static_cast<size_t>(n));
      NgramCounts ref = count_ngrams(references[p], static_cast<size_t>(n));
      num[n - 1] += clipped_matches(cand, ref);
      size_t len = candidates[p].tokens.size();
      den[n - 1] += len >= static_cast<size_t>(n) ? len - n + 1 : 0;
    }
  }
  if (total_cand_len == 0) return 0.0;
  double log_p = 0.0;
  for (int n = 0; n < max_n; ++n) {
    if (num[n] == 0 || den[n] == 0) return 0.0;
    log_p += std::log(static_cast<double>(num[n]) / static_cast<double>(den[n]));
  }
  double bp = total_cand_len > total_ref_len
                  ? 1.0
                  : std::exp(1.0 - static_cast<double>(total_ref_len) /
                                       static_cast<double>(total_cand_len));
  return bp * std::exp(log_p / max_n);
}

double sentence_bleu(const TokenSeq& candidate, const TokenSeq& reference,
                     int max_n) {
  if (max_n < 1 || max_n > 4) throw DataError("max_n must be in 1..4");
  size_t c = candidate.tokens.size();
  size_t r = reference.tokens.size();
  if (c == 0) return 0.0;

  double log_p = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    NgramCounts cand = count_ngrams(candidate, static_cast<size_t>(n));
    NgramCounts ref = count_ngrams(reference, static_cast<size_t>(n));
    size_t matches = clipped_matches(cand, ref);
    size_t total = c >= static_cast<size_t>(n) ? c - n + 1 : 0;
    if (n == 1) {
      if (matches == 0 || total == 0) return 0.0;
      log_p += std::log(static_cast<double>(matches) /
                        static_cast<double>(total));
    } else {
      log_p += std::log(static_cast<double>(matches + 1) /
                        static_cast<double>(total + 1));
    }
  }
  double bp = c > r ? 1.0
                    : std::exp(1.0 - static_cast<double>(r) /
                                         static_cast<double>(c));
  return bp * std::exp(log_p / max_n);
}

double mean_sentence_bleu(const std::vector<TokenSeq>& candidates,
                          const std::vector<TokenSeq>& references, int max_n) {
  check_corpus(candidates, references);
  double sum = 0.0;
  for (size_t i = 0; i < candidates.size(); ++i) {
    sum += sentence_bleu(candidates[i], references[i], max_n);
  }
  return sum / static_cast<double>(candidates.size());
}

// ---------------------------------------------------------------------------
// ROUGE-L

double rouge_l(const TokenSeq& candidate, const TokenSeq& reference) {
  size_t m = candidate.tokens.size();
  size_t n = reference.tokens.size();
  if (m == 0 || n == 0) return 0.0;
  // Two-row LCS table.
  std::vector<size_t> prev(n + 1, 0), cur(n + 1, 0);
  for (size_t i = 1; i <= m; ++i) {
    for (size_t j = 1; j <= n; ++j) {
      if (candidate.tokens[i - 1] == reference.tokens[j - 1]) {
        cur[j] = prev[j - 1] + 1;
      } else {
        cur[j] = std::max(prev[j], cur[j - 1]);
      }
    }
    std::swap(prev, cur);
  }
  double lcs = static_cast<double>(prev[n]);
  if (lcs == 0.0) return 0.0;
  double p = lcs / static_cast<double>(m);
  double r = lcs / static_cast<double>(n);
  return 2.0 * p * r / (p + r);
}

double rouge_l_corpus(const std::vector<TokenSeq>& candidates,
                      const std::vector<TokenSeq>& references) {
  check_corpus(candidates, references);
  double sum = 0.0;
  for (size_t i = 0; i < candidates.size(); ++i) {
    sum += rouge_l(candidates[i], references[i]);
  }
  return sum / static_cast<double>(candidates.size());
}

// ---------------------------------------------------------------------------
// METEOR-lite

namespace detail {

namespace {

constexpr size_t kExactMaskLimit = 48;
constexpr size_t kExactCandLimit = 255;
constexpr size_t kNodeBudget = 500000;
constexpr size_t kNoPrev = 255;

struct AlignProblem {
  std::vector<int> cand_class;          // per candidate token
  std::vector<int> ref_class;           // per reference token
  std::vector<int> need;                // per class: matches required
  std::vector<std::vector<int>> cand_suffix;  // [i][s]: class-s tokens in cand[i..)
};

struct BudgetExceeded {};

class ExactSearch {
 public:
  explicit ExactSearch(const AlignProblem& p) : p_(p) {}

  // Minimum chunks over all maximum alignments.
  size_t run() {
    remaining_ = p_.need;
    return dfs(0, 0, kNoPrev);
  }

 private:
  size_t dfs(size_t i, uint64_t mask, size_t prev_j) {
    if (i == p_.cand_class.size()) {
      for (int r : remaining_) {
        if (r != 0) return kInf;
      }
      return 0;
    }
    uint64_t prev_code = prev_j == kNoPrev ? 0 : prev_j + 1;
    uint64_t key = mask | (prev_code << 48) | (static_cast<uint64_t>(i) << 56);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    if (++nodes_ > kNodeBudget) throw BudgetExceeded{};

    size_t best = kInf;
    int cls = p_.cand_class[i];
    // Skip candidate i if the rest of the sequence can still cover the
    // quota for its class.
    if (p_.cand_suffix[i + 1][cls] >= remaining_[cls]) {
      best = dfs(i + 1, mask, kNoPrev);
    }
    if (remaining_[cls] > 0) {
      for (size_t j = 0; j < p_.ref_class.size(); ++j) {
        if (p_.ref_class[j] != cls || (mask >> j) & 1) continue;
        size_t cost = (prev_j != kNoPrev && j == prev_j + 1) ? 0 : 1;
        --remaining_[cls];
        size_t sub = dfs(i + 1, mask | (uint64_t{1} << j), j);
        ++remaining_[cls];
        if (sub != kInf && cost + sub < best) best = cost + sub;
      }
    }
    memo_[key] = best;
    return best;
  }

  static constexpr size_t kInf = std::numeric_limits<size_t>::max() / 2;
  const AlignProblem& p_;
  std::vector<int> remaining_;
  std::unordered_map<uint64_t, size_t> memo_;
  size_t nodes_ = 0;
};

// Fallback for long or highly repetitive inputs: in-order matching that
// prefers extending the current chunk. Same match count, chunks may be
// slightly above the optimum.
size_t greedy_chunks(const AlignProblem& p) {
  std::vector<int> remaining = p.need;
  std::vector<bool> used(p.ref_class.size(), false);
  size_t chunks = 0;
  size_t prev_j = kNoPrev;
  for (size_t i = 0; i < p.cand_class.size(); ++i) {
    int cls = p.cand_class[i];
    if (remaining[cls] <= 0) {
      prev_j = kNoPrev;
      continue;
    }
    size_t pick = kNoPrev;
    if (prev_j != kNoPrev && prev_j + 1 < p.ref_class.size() &&
        !used[prev_j + 1] && p.ref_class[prev_j + 1] == cls) {
      pick = prev_j + 1;
    } else {
      for (size_t j = 0; j < p.ref_class.size(); ++j) {
        if (!used[j] && p.ref_class[j] == cls) {
          pick = j;
          break;
        }
      }
    }
    if (pick == kNoPrev) {
      prev_j = kNoPrev;
      continue;
    }
    used[pick] = true;
    --remaining[cls];
    if (!(prev_j != kNoPrev && pick == prev_j + 1)) ++chunks;
    prev_j = pick;
  }
  return chunks;
}

}  // namespace

std::pair<size_t, size_t> meteor_alignment(const TokenSeq& candidate,
                                           const TokenSeq& reference) {
  // Exact token equality implies stem equality, so compatibility for the
  // exact and stem stages together reduces to equal stems.
  std::unordered_map<std::string, int> class_of;
  AlignProblem p;
  auto classify = [&](const std::string& token) {
    std::string stem = porter_stem(token);
    auto [it, inserted] = class_of.emplace(stem, class_of.size());
    return it->second;
  };
  for (const auto& t : candidate.tokens) p.cand_class.push_back(classify(t));
  for (const auto& t : reference.tokens) p.ref_class.push_back(classify(t));

  size_t n_classes = class_of.size();
  std::vector<int> cand_count(n_classes, 0), ref_count(n_classes, 0);
  for (int c : p.cand_class) ++cand_count[c];
  for (int c : p.ref_class) ++ref_count[c];
  p.need.resize(n_classes);
  size_t m = 0;
  for (size_t s = 0; s < n_classes; ++s) {
    p.need[s] = std::min(cand_count[s], ref_count[s]);
    m += static_cast<size_t>(p.need[s]);
  }
  if (m == 0) return {0, 0};

  p.cand_suffix.assign(p.cand_class.size() + 1,
                       std::vector<int>(n_classes, 0));
  for (size_t i = p.cand_class.size(); i-- > 0;) {
    p.cand_suffix[i] = p.cand_suffix[i + 1];
    ++p.cand_suffix[i][p.cand_class[i]];
  }

  size_t chunks;
  if (p.ref_class.size() <= kExactMaskLimit &&
      p.cand_class.size() <= kExactCandLimit) {
    try {
      chunks = ExactSearch(p).run();
    } catch (const BudgetExceeded&) {
      chunks = greedy_chunks(p);
    }
  } else {
    chunks = greedy_chunks(p);
  }
  return {m, chunks};
}

}  // namespace detail

double meteor_lite(const TokenSeq& candidate, const TokenSeq& reference) {
  if (candidate.tokens.empty() || reference.tokens.empty()) return 0.0;
  auto [m, chunks] = detail::meteor_alignment(candidate, reference);
  if (m == 0) return 0.0;
  double md = static_cast<double>(m);
  double p = md / static_cast<double>(candidate.tokens.size());
  double r = md / static_cast<double>(reference.tokens.size());
  double fmean = 10.0 * p * r / (r + 9.0 * p);
  double frag = static_cast<double>(chunks) / md;
  double penalty = 0.5 * frag * frag * frag;
  return fmean * (1.0 - penalty);
}

double meteor_lite_corpus(const std::vector<TokenSeq>& candidates,
                          const std::vector<TokenSeq>& references) {
  check_corpus(candidates, references);
  double sum = 0.0;
  for (size_t i = 0; i < candidates.size(); ++i) {
    sum += meteor_lite(candidates[i], references[i]);
  }
  return sum / static_cast<double>(candidates.size());
}

// ---------------------------------------------------------------------------

int exact_match(const std::vector<std::string>& predicted,
                const std::vector<std::string>& gold) {
  std::set<std::string> p, g;
  for (const auto& s : predicted) p.insert(normalize_answer(s));
  for (const auto& s : gold) g.insert(normalize_answer(s));
  return p == g ? 1 : 0;
}

NlgScores score_corpus(const std::vector<TokenSeq>& candidates,
                       const std::vector<TokenSeq>& references) {
  NlgScores s;
  s.bleu1 = bleu(candidates, references, 1);
  s.bleu2 = bleu(candidates, references, 2);
  s.bleu3 = bleu(candidates, references, 3);
  s.bleu4 = bleu(candidates, references, 4);
  s.rouge_l = rouge_l_corpus(candidates, references);
  s.meteor = meteor_lite_corpus(candidates, references);
  s.sentence_bleu1 = mean_sentence_bleu(candidates, references, 1);
  s.sentence_bleu2 = mean_sentence_bleu(candidates, references, 2);
  s.sentence_bleu3 = mean_sentence_bleu(candidates, references, 3);
  s.sentence_bleu4 = mean_sentence_bleu(candidates, references, 4);
  return s;
}

}  // namespace ecgregen
