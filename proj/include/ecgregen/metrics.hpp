#pragma once

#include <string>
#include <vector>

// NLG and QA scoring: BLEU-1..4, ROUGE-L, METEOR-lite, exact match.
//
// All scores lie in [0,1]. Corpus BLEU pools clipped n-gram counts over the
// whole corpus (no smoothing; any zero pooled precision gives 0); the
// sentence variant applies add-1 smoothing to numerator and denominator for
// n >= 2 and is reported as the arithmetic mean over pairs. ROUGE-L is the
// LCS F1; corpus ROUGE-L and METEOR-lite are arithmetic means over pairs.
// METEOR-lite aligns unigrams by exact match or Porter-stem equality,
// maximizing matches and then minimizing chunks; it omits full METEOR's
// synonym and paraphrase stages.

namespace ecgregen {

struct TokenSeq {
  std::vector<std::string> tokens;

  bool operator==(const TokenSeq&) const = default;
};

/// ASCII-lowercases, detaches .,;:!?()/- as single-character tokens, splits
/// on whitespace and drops empties. Bytes outside ASCII pass through
/// unchanged.
TokenSeq tokenize(const std::string& text);

/// Trim, lowercase, collapse internal whitespace runs to one space.
std::string normalize_answer(const std::string& s);

/// Corpus-level BLEU, one reference per candidate. max_n in 1..4.
double bleu(const std::vector<TokenSeq>& candidates,
            const std::vector<TokenSeq>& references, int max_n);

/// Sentence BLEU with add-1 smoothing on numerator and denominator for
/// n >= 2 (n = 1 unsmoothed; a zero p1 still zeroes the score).
double sentence_bleu(const TokenSeq& candidate, const TokenSeq& reference,
                     int max_n);

double mean_sentence_bleu(const std::vector<TokenSeq>& candidates,
                          const std::vector<TokenSeq>& references, int max_n);

/// ROUGE-L F1 for one pair; 0 if either sequence is empty.
double rouge_l(const TokenSeq& candidate, const TokenSeq& reference);

double rouge_l_corpus(const std::vector<TokenSeq>& candidates,
                      const std::vector<TokenSeq>& references);

/// METEOR restricted to exact + Porter-stem matching.
/// Fmean = 10PR/(R+9P), penalty = 0.5*(chunks/m)^3; 0 when m = 0.
double meteor_lite(const TokenSeq& candidate, const TokenSeq& reference);

double meteor_lite_corpus(const std::vector<TokenSeq>& candidates,
                          const std::vector<TokenSeq>& references);

/// 1 iff the normalized answer sets are equal.
int exact_match(const std::vector<std::string>& predicted,
                const std::vector<std::string>& gold);

struct NlgScores {
  double bleu1 = 0, bleu2 = 0, bleu3 = 0, bleu4 = 0;
  double rouge_l = 0, meteor = 0;
  double sentence_bleu1 = 0, sentence_bleu2 = 0, sentence_bleu3 = 0,
         sentence_bleu4 = 0;
};

/// Computes every score over a candidate/reference corpus.
NlgScores score_corpus(const std::vector<TokenSeq>& candidates,
                       const std::vector<TokenSeq>& references);

namespace detail {
/// (match count, chunk count) of the METEOR-lite alignment.
std::pair<size_t, size_t> meteor_alignment(const TokenSeq& candidate,
                                           const TokenSeq& reference);
}  // namespace detail

}  // namespace ecgregen
