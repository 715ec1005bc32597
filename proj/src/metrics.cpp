#include "rca/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <exception>
#include <map>
#include <unordered_map>

#include "rca/stemmer.hpp"
#include "rca/util.hpp"

namespace rca {

namespace {

// Byte length of a Unicode whitespace sequence at pos, 0 if none.
std::size_t whitespace_length(std::string_view s, std::size_t pos) {
    const auto c = static_cast<unsigned char>(s[pos]);
    if (c < 0x80) return std::isspace(c) ? 1 : 0;
    auto byte = [&](std::size_t k) {
        return pos + k < s.size() ? static_cast<unsigned char>(s[pos + k]) : 0;
    };
    if (c == 0xC2 && (byte(1) == 0x85 || byte(1) == 0xA0)) return 2;
    if (c == 0xE1 && byte(1) == 0x9A && byte(2) == 0x80) return 3;  // U+1680
    if (c == 0xE2 && byte(1) == 0x80) {
        const auto b2 = byte(2);
        if ((b2 >= 0x80 && b2 <= 0x8A) || b2 == 0xA8 || b2 == 0xA9 || b2 == 0xAF) return 3;
    }
    if (c == 0xE2 && byte(1) == 0x81 && byte(2) == 0x9F) return 3;  // U+205F
    if (c == 0xE3 && byte(1) == 0x80 && byte(2) == 0x80) return 3;  // U+3000
    return 0;
}

bool is_ascii_punct(char c) {
    const auto u = static_cast<unsigned char>(c);
    return u < 0x80 && std::ispunct(u);
}

void push_token(Tokens& out, std::string_view raw) {
    while (!raw.empty() && is_ascii_punct(raw.front())) raw.remove_prefix(1);
    while (!raw.empty() && is_ascii_punct(raw.back())) raw.remove_suffix(1);
    if (!raw.empty()) out.push_back(to_lower_ascii(raw));
}

using NgramCounts = std::map<std::vector<std::string_view>, std::size_t>;

NgramCounts count_ngrams(const Tokens& t, std::size_t n) {
    NgramCounts counts;
    if (n == 0 || t.size() < n) return counts;
    for (std::size_t i = 0; i + n <= t.size(); ++i) {
        std::vector<std::string_view> key(t.begin() + static_cast<std::ptrdiff_t>(i),
                                          t.begin() + static_cast<std::ptrdiff_t>(i + n));
        ++counts[key];
    }
    return counts;
}

std::size_t ngram_total(const Tokens& t, std::size_t n) {
    return t.size() >= n ? t.size() - n + 1 : 0;
}

void require_reference(const Tokens& reference, std::size_t n = 1) {
    if (ngram_total(reference, n) == 0)
        fail(ErrorKind::InvalidArgument, "reference has no " + std::to_string(n) + "-grams");
}

// ---- METEOR alignment search ---------------------------------------------

class MeteorSearch {
public:
    MeteorSearch(const Tokens& cand, const Tokens& ref, std::size_t budget) : budget_(budget) {
        std::unordered_map<std::string, int> words, stems;
        auto word_id = [&](const std::string& w) {
            return words.emplace(w, static_cast<int>(words.size())).first->second;
        };
        auto stem_id = [&](const std::string& w) {
            return stems.emplace(porter_stem(w), static_cast<int>(stems.size())).first->second;
        };
        for (const auto& t : cand) {
            cw_.push_back(word_id(t));
            cs_.push_back(stem_id(t));
        }
        for (const auto& t : ref) {
            rw_.push_back(word_id(t));
            rs_.push_back(stem_id(t));
        }
        const auto nw = words.size();
        const auto ns = stems.size();
        std::vector<int> cc(nw, 0), rc(nw, 0);
        std::vector<int> stem_of(nw, 0);
        for (std::size_t i = 0; i < cand.size(); ++i) {
            ++cc[static_cast<std::size_t>(cw_[i])];
            stem_of[static_cast<std::size_t>(cw_[i])] = cs_[i];
        }
        for (std::size_t j = 0; j < ref.size(); ++j) {
            ++rc[static_cast<std::size_t>(rw_[j])];
            stem_of[static_cast<std::size_t>(rw_[j])] = rs_[j];
        }
        cand_cap_.resize(nw);
        ref_cap_.resize(nw);
        std::vector<int> cand_resid_by_stem(ns, 0), ref_resid_by_stem(ns, 0);
        for (std::size_t w = 0; w < nw; ++w) {
            const int exact = std::min(cc[w], rc[w]);
            total_ += exact;
            cand_cap_[w] = cc[w] - exact;
            ref_cap_[w] = rc[w] - exact;
            cand_resid_by_stem[static_cast<std::size_t>(stem_of[w])] += cand_cap_[w];
            ref_resid_by_stem[static_cast<std::size_t>(stem_of[w])] += ref_cap_[w];
        }
        stem_target_.resize(ns);
        for (std::size_t s = 0; s < ns; ++s) {
            stem_target_[s] = std::min(cand_resid_by_stem[s], ref_resid_by_stem[s]);
            total_ += stem_target_[s];
        }

        // An adjacency at i needs some reference bigram admissible for (i-1, i).
        auto admissible = [&](std::size_t i, std::size_t j) { return rw_[j] == cw_[i] || rs_[j] == cs_[i]; };
        adjacency_suffix_.assign(cand.size() + 1, 0);
        for (std::size_t i = cand.size(); i-- > 1;) {
            bool any = false;
            for (std::size_t j = 1; j < ref.size() && !any; ++j) any = admissible(i - 1, j - 1) && admissible(i, j);
            adjacency_suffix_[i] = adjacency_suffix_[i + 1] + (any ? 1 : 0);
        }
        if (!cand.empty()) adjacency_suffix_[0] = adjacency_suffix_[1];
        rem_stem_.assign(ns, 0);
        for (int s : cs_) ++rem_stem_[static_cast<std::size_t>(s)];
        cand_nonexact_.assign(nw, 0);
        ref_stem_used_.assign(nw, 0);
        stem_matched_.assign(ns, 0);
        ref_used_.assign(ref.size(), false);
        align_.assign(cand.size(), -1);
    }

    MeteorAlignment run() {
        MeteorAlignment result;
        result.matches = static_cast<std::size_t>(total_);
        if (total_ == 0) return result;
        dfs(0, 0);
        result.exhaustive = !aborted_;
        result.chunks = best_adj_ < 0 ? static_cast<std::size_t>(total_)
                                      : static_cast<std::size_t>(total_ - best_adj_);
        return result;
    }

private:
    void dfs(std::size_t i, int adj) {
        if (aborted_ || done_) return;
        if (++nodes_ > budget_) {
            aborted_ = true;
            return;
        }
        if (adj + std::min(adjacency_suffix_[i], total_ - matched_) <= best_adj_) return;
        if (i == cw_.size()) {
            for (std::size_t s = 0; s < stem_target_.size(); ++s)
                if (stem_matched_[s] != stem_target_[s]) return;
            best_adj_ = adj;
            if (best_adj_ == total_ - 1) done_ = true;
            return;
        }

        const auto w = static_cast<std::size_t>(cw_[i]);
        const auto s = static_cast<std::size_t>(cs_[i]);
        --rem_stem_[s];
        const int prev = i > 0 ? align_[i - 1] : -1;

        auto try_exact = [&](int j) {
            const auto uj = static_cast<std::size_t>(j);
            if (ref_used_[uj] || rw_[uj] != cw_[i]) return;
            // Exact matches never change the stem bookkeeping, but the stem
            // class of this position still has to be completable.
            if (stem_target_[s] - stem_matched_[s] > rem_stem_[s]) return;
            ref_used_[uj] = true;
            align_[i] = j;
            ++matched_;
            dfs(i + 1, adj + (prev >= 0 && prev + 1 == j ? 1 : 0));
            --matched_;
            align_[i] = -1;
            ref_used_[uj] = false;
        };
        auto try_stem = [&](int j) {
            const auto uj = static_cast<std::size_t>(j);
            const auto v = static_cast<std::size_t>(rw_[uj]);
            if (ref_used_[uj] || rw_[uj] == cw_[i] || rs_[uj] != cs_[i]) return;
            if (cand_nonexact_[w] >= cand_cap_[w] || ref_stem_used_[v] >= ref_cap_[v] ||
                stem_matched_[s] >= stem_target_[s])
                return;
            if (stem_target_[s] - (stem_matched_[s] + 1) > rem_stem_[s]) return;
            ref_used_[uj] = true;
            ++cand_nonexact_[w];
            ++ref_stem_used_[v];
            ++stem_matched_[s];
            align_[i] = j;
            ++matched_;
            dfs(i + 1, adj + (prev >= 0 && prev + 1 == j ? 1 : 0));
            --matched_;
            align_[i] = -1;
            --stem_matched_[s];
            --ref_stem_used_[v];
            --cand_nonexact_[w];
            ref_used_[uj] = false;
        };

        const int nref = static_cast<int>(rw_.size());
        const int preferred = prev >= 0 && prev + 1 < nref ? prev + 1 : -1;
        if (preferred >= 0) {
            try_exact(preferred);
            try_stem(preferred);
        }
        for (int j = 0; j < nref; ++j)
            if (j != preferred) try_exact(j);
        for (int j = 0; j < nref; ++j)
            if (j != preferred) try_stem(j);
        if (cand_nonexact_[w] < cand_cap_[w] && stem_target_[s] - stem_matched_[s] <= rem_stem_[s]) {
            ++cand_nonexact_[w];
            dfs(i + 1, adj);
            --cand_nonexact_[w];
        }
        ++rem_stem_[s];
    }

    std::size_t budget_;
    std::size_t nodes_ = 0;
    bool aborted_ = false;
    bool done_ = false;
    int total_ = 0;
    int matched_ = 0;
    int best_adj_ = -1;
    std::vector<int> cw_, cs_, rw_, rs_;
    std::vector<int> cand_cap_, ref_cap_, stem_target_;
    std::vector<int> adjacency_suffix_, rem_stem_;
    std::vector<int> cand_nonexact_, ref_stem_used_, stem_matched_;
    std::vector<bool> ref_used_;
    std::vector<int> align_;
};

}  // namespace

Tokens normalize_tokens(std::string_view text) {
    Tokens out;
    std::size_t start = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        if (const auto ws = whitespace_length(text, i); ws > 0) {
            if (i > start) push_token(out, text.substr(start, i - start));
            i += ws;
            start = i;
        } else {
            ++i;
        }
    }
    if (start < text.size()) push_token(out, text.substr(start));
    return out;
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
    if (a.empty() || b.empty()) return 0;
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

std::size_t ngram_overlap(const Tokens& a, const Tokens& b, std::size_t n) {
    const auto ca = count_ngrams(a, n);
    const auto cb = count_ngrams(b, n);
    std::size_t overlap = 0;
    for (const auto& [gram, count] : ca)
        if (auto it = cb.find(gram); it != cb.end()) overlap += std::min(count, it->second);
    return overlap;
}

double f1_score(double precision, double recall) {
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

double rouge_n(const Tokens& candidate, const Tokens& reference, std::size_t n) {
    if (n == 0) fail(ErrorKind::InvalidArgument, "n-gram order must be positive");
    require_reference(reference, n);
    const auto cand_total = ngram_total(candidate, n);
    if (cand_total == 0) return 0.0;
    const auto overlap = static_cast<double>(ngram_overlap(candidate, reference, n));
    return 100.0 * f1_score(overlap / static_cast<double>(cand_total),
                            overlap / static_cast<double>(ngram_total(reference, n)));
}

double rouge_l(const Tokens& candidate, const Tokens& reference) {
    require_reference(reference);
    if (candidate.empty()) return 0.0;
    const auto l = static_cast<double>(lcs_length(candidate, reference));
    return 100.0 * f1_score(l / static_cast<double>(candidate.size()),
                            l / static_cast<double>(reference.size()));
}

double gleu(const Tokens& candidate, const Tokens& reference, std::size_t max_n) {
    if (max_n == 0) fail(ErrorKind::InvalidArgument, "GLEU max n must be positive");
    require_reference(reference);
    std::size_t matched = 0, cand_total = 0, ref_total = 0;
    for (std::size_t n = 1; n <= max_n; ++n) {
        matched += ngram_overlap(candidate, reference, n);
        cand_total += ngram_total(candidate, n);
        ref_total += ngram_total(reference, n);
    }
    if (cand_total == 0) return 0.0;
    const double p = static_cast<double>(matched) / static_cast<double>(cand_total);
    const double r = static_cast<double>(matched) / static_cast<double>(ref_total);
    return 100.0 * std::min(p, r);
}

MeteorAlignment meteor_align(const Tokens& candidate, const Tokens& reference,
                             std::size_t node_budget) {
    return MeteorSearch(candidate, reference, node_budget).run();
}

double meteor(const Tokens& candidate, const Tokens& reference) {
    require_reference(reference);
    if (candidate.empty()) return 0.0;
    const auto a = meteor_align(candidate, reference);
    if (a.matches == 0) return 0.0;
    const double m = static_cast<double>(a.matches);
    const double p = m / static_cast<double>(candidate.size());
    const double r = m / static_cast<double>(reference.size());
    const double f = 10.0 * p * r / (r + 9.0 * p);
    const double frag = static_cast<double>(a.chunks) / m;
    const double penalty = 0.5 * frag * frag * frag;
    return 100.0 * f * (1.0 - penalty);
}

double rouge_n(std::string_view candidate, std::string_view reference, std::size_t n) {
    return rouge_n(normalize_tokens(candidate), normalize_tokens(reference), n);
}
double rouge_l(std::string_view candidate, std::string_view reference) {
    return rouge_l(normalize_tokens(candidate), normalize_tokens(reference));
}
double meteor(std::string_view candidate, std::string_view reference) {
    return meteor(normalize_tokens(candidate), normalize_tokens(reference));
}
double gleu(std::string_view candidate, std::string_view reference, std::size_t max_n) {
    return gleu(normalize_tokens(candidate), normalize_tokens(reference), max_n);
}

std::string_view metric_name(Metric metric) {
    switch (metric) {
        case Metric::RougeL: return "ROUGE-L";
        case Metric::Rouge1: return "ROUGE-1";
        case Metric::Meteor: return "METEOR";
        case Metric::Gleu: return "GLEU";
    }
    return "";
}

HttpExternalScorer::HttpExternalScorer(std::string name, std::string endpoint, RetryPolicy retry)
    : name_(std::move(name)), endpoint_(std::move(endpoint)), retry_(retry) {
    parse_endpoint(endpoint_);
}

std::vector<double> HttpExternalScorer::score(const std::vector<TextPair>& pairs) {
    nlohmann::json body{{"pairs", nlohmann::json::array()}};
    for (const auto& p : pairs)
        body["pairs"].push_back({{"candidate", p.candidate}, {"reference", p.reference}});
    const auto reply = post_json(endpoint_, body, retry_, resolve_api_key());
    auto it = reply.find("scores");
    if (it == reply.end() || !it->is_array() || it->size() != pairs.size())
        fail(ErrorKind::Provider, "external scorer returned a malformed score list");
    std::vector<double> scores;
    for (const auto& v : *it) {
        if (!v.is_number()) fail(ErrorKind::Provider, "non-numeric external score");
        scores.push_back(v.get<double>());
    }
    return scores;
}

std::vector<double> MetricReport::column(std::size_t metric) const {
    std::vector<double> out;
    out.reserve(per_pair.size());
    for (const auto& row : per_pair) out.push_back(row.at(metric));
    return out;
}

std::vector<double> score_pair(const TextPair& pair) {
    const auto cand = normalize_tokens(pair.candidate);
    const auto ref = normalize_tokens(pair.reference);
    return {rouge_l(cand, ref), rouge_n(cand, ref, 1), meteor(cand, ref), gleu(cand, ref)};
}

MetricReport evaluate_corpus(const std::vector<TextPair>& pairs, kernels::Exec exec,
                             ExternalScorer* external) {
    if (pairs.empty()) fail(ErrorKind::InvalidArgument, "cannot evaluate an empty pair list");
    MetricReport report;
    report.n = pairs.size();
    for (std::size_t m = 0; m < kNativeMetricCount; ++m)
        report.names.emplace_back(metric_name(static_cast<Metric>(m)));
    report.per_pair.resize(pairs.size());

    if (exec == kernels::Exec::Parallel) {
        std::vector<std::exception_ptr> errors(pairs.size());
        const auto n = static_cast<std::ptrdiff_t>(pairs.size());
#pragma omp parallel for schedule(dynamic)
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            const auto idx = static_cast<std::size_t>(i);
            try {
                report.per_pair[idx] = score_pair(pairs[idx]);
            } catch (...) {
                errors[idx] = std::current_exception();
            }
        }
        for (const auto& e : errors)
            if (e) std::rethrow_exception(e);
    } else {
        for (std::size_t i = 0; i < pairs.size(); ++i) report.per_pair[i] = score_pair(pairs[i]);
    }

    if (external) {
        const auto scores = external->score(pairs);
        if (scores.size() != pairs.size())
            fail(ErrorKind::Provider, "external scorer returned the wrong number of scores");
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            if (!(scores[i] >= 0.0 && scores[i] <= 100.0))
                fail(ErrorKind::Provider, "external score outside [0, 100]");
            report.per_pair[i].push_back(scores[i]);
        }
        report.names.push_back(external->name());
    }

    report.means.assign(report.names.size(), 0.0);
    for (const auto& row : report.per_pair)
        for (std::size_t m = 0; m < row.size(); ++m) report.means[m] += row[m];
    for (auto& v : report.means) v /= static_cast<double>(report.n);
    return report;
}

}  // namespace rca
