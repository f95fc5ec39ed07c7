#pragma once

// Test-only fixtures and independent oracles. The oracles deliberately avoid
// the library code paths they are used to check.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include "mgtd/scored_sample.hpp"
#include "mgtd/text_sample.hpp"

namespace mgtd_test {

// Unique scratch directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("mgtd_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline mgtd::TextSample make_sample(const std::string& id, const std::string& text,
                                    mgtd::Label label, const std::string& language = "en",
                                    const std::string& source = "testsrc") {
    mgtd::TextSample s;
    s.id = id;
    s.text = text;
    s.label = label;
    s.generator = label == mgtd::Label::human ? "human" : "gen-x";
    s.language = language;
    s.domain = "news";
    s.source = source;
    s.split = mgtd::Split::train;
    return s;
}

inline mgtd::ScoredSample make_scored(const std::string& id, mgtd::Label label, double score,
                                      const std::string& language = "",
                                      const std::string& dataset = "ds") {
    mgtd::ScoredSample s;
    s.id = id;
    s.label = label;
    s.score = score;
    s.language = language;
    s.dataset = dataset;
    return s;
}

// O(n^2) Mann-Whitney statistic over all machine/human pairs:
// P(score_m > score_h) + 1/2 P(score_m == score_h).
inline double auc_pairwise_oracle(const std::vector<mgtd::ScoredSample>& scored) {
    double wins = 0.0;
    std::int64_t pairs = 0;
    for (const auto& m : scored) {
        if (m.label != mgtd::Label::machine) {
            continue;
        }
        for (const auto& h : scored) {
            if (h.label != mgtd::Label::human) {
                continue;
            }
            ++pairs;
            if (m.score > h.score) {
                wins += 1.0;
            } else if (m.score == h.score) {
                wins += 0.5;
            }
        }
    }
    return wins / static_cast<double>(pairs);
}

// Direct confusion counting (machine iff score >= threshold), independent of
// the metrics module.
struct OracleConfusion {
    std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
};

inline OracleConfusion confusion_oracle(const std::vector<mgtd::ScoredSample>& scored,
                                        double threshold) {
    OracleConfusion c;
    for (const auto& s : scored) {
        bool machine = s.score >= threshold;
        if (s.label == mgtd::Label::machine) {
            machine ? ++c.tp : ++c.fn;
        } else {
            machine ? ++c.fp : ++c.tn;
        }
    }
    return c;
}

inline double macro_f1_oracle(const OracleConfusion& c) {
    double f1m = (2.0 * c.tp + c.fp + c.fn) == 0 ? 0.0
                                                 : 2.0 * c.tp / (2.0 * c.tp + c.fp + c.fn);
    double f1h = (2.0 * c.tn + c.fn + c.fp) == 0 ? 0.0
                                                 : 2.0 * c.tn / (2.0 * c.tn + c.fn + c.fp);
    return (f1m + f1h) / 2.0;
}

// Exhaustive sweep over every realized threshold (all distinct scores plus
// the all-negative sentinel): the best TPR whose FPR stays within target.
inline double tpr_at_fpr_oracle(const std::vector<mgtd::ScoredSample>& scored,
                                double fpr_target) {
    std::int64_t positives = 0;
    std::int64_t negatives = 0;
    for (const auto& s : scored) {
        (s.label == mgtd::Label::machine ? positives : negatives)++;
    }
    std::vector<double> thresholds;
    for (const auto& s : scored) {
        thresholds.push_back(s.score);
    }
    double best = 0.0;  // the all-negative sentinel always qualifies
    for (double t : thresholds) {
        auto c = confusion_oracle(scored, t);
        double fpr = negatives == 0 ? 0.0 : static_cast<double>(c.fp) / negatives;
        double tpr = positives == 0 ? 0.0 : static_cast<double>(c.tp) / positives;
        if (fpr <= fpr_target) {
            best = std::max(best, tpr);
        }
    }
    return best;
}

// Scored-set generator with planted score ties.
inline std::vector<mgtd::ScoredSample> random_scored_set(std::mt19937& gen, int max_n = 50) {
    std::uniform_int_distribution<int> size_dist(1, max_n);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> grid(0, 9);
    std::vector<mgtd::ScoredSample> scored;
    int n_machine = size_dist(gen);
    int n_human = size_dist(gen);
    bool coarse = unit(gen) < 0.5;  // coarse grids force ties
    auto draw = [&]() { return coarse ? grid(gen) / 9.0 : unit(gen); };
    for (int i = 0; i < n_machine; ++i) {
        scored.push_back(make_scored("m" + std::to_string(i), mgtd::Label::machine, draw()));
    }
    for (int i = 0; i < n_human; ++i) {
        scored.push_back(make_scored("h" + std::to_string(i), mgtd::Label::human, draw()));
    }
    return scored;
}

}  // namespace mgtd_test
