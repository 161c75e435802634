#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ktnas/common.hpp"
#include "ktnas/features.hpp"
#include "ktnas/rng.hpp"

namespace ktnas {

// One student-exercise event. Categorical ids are 1-based in raw data; index 0
// is reserved everywhere for start/padding tokens.
struct InteractionRecord {
    int32_t exercise = 0;
    int32_t skill = 0;
    int32_t tag = 0;
    int32_t tagset = 0;
    int32_t bundle = 0;
    int64_t timestamp_ms = 0;
    int64_t elapsed_ms = 0;
    int8_t response = 0;
};

struct StudentRecords {
    std::string student_id;
    std::vector<InteractionRecord> records;
};

// Declared value counts of the raw categorical features; values are 1..count.
struct FeatureVocabulary {
    int32_t exercises = 0;
    int32_t skills = 0;
    int32_t tags = 0;
    int32_t tagsets = 0;
    int32_t bundles = 0;

    // Embedding table rows per categorical stream slot (fixed bucket features
    // included), always one extra row for the reserved index 0.
    int32_t table_rows(int cat_slot) const {
        switch (cat_slot) {
            case 0: return exercises + 1;
            case 1: return skills + 1;
            case 2: return tags + 1;
            case 3: return tagsets + 1;
            case 4: return bundles + 1;
            case 5: return 3;  // ans: start, wrong, correct
            case 6: return static_cast<int32_t>(kElapsedSecondsCap) + 2;
            case 7: return static_cast<int32_t>(kLagSecondsCap) + 2;
            case 8: return static_cast<int32_t>(kLagMinutesCap) + 2;
            case 9: return static_cast<int32_t>(kLagDaysCap) + 2;
            default: throw std::runtime_error("table_rows: bad categorical slot");
        }
    }
};

inline nlohmann::json vocab_to_json(const FeatureVocabulary& v) {
    return nlohmann::json{{"exercises", v.exercises}, {"skills", v.skills},   {"tags", v.tags},
                          {"tagsets", v.tagsets},     {"bundles", v.bundles}};
}

inline FeatureVocabulary vocab_from_json(const nlohmann::json& j) {
    FeatureVocabulary v;
    v.exercises = j.at("exercises").get<int32_t>();
    v.skills = j.at("skills").get<int32_t>();
    v.tags = j.at("tags").get<int32_t>();
    v.tagsets = j.at("tagsets").get<int32_t>();
    v.bundles = j.at("bundles").get<int32_t>();
    return v;
}

struct IngestResult {
    std::vector<StudentRecords> students;
    FeatureVocabulary vocab;
};

namespace detail {

inline int64_t get_int_field(const nlohmann::json& j, const char* key, size_t line_no) {
    if (!j.contains(key) || !j[key].is_number_integer())
        throw std::runtime_error("line " + std::to_string(line_no) + ": missing or non-integer field '" +
                                 key + "'");
    return j[key].get<int64_t>();
}

inline void check_categorical(const char* name, int64_t value, int32_t declared, size_t line_no) {
    if (value < 1)
        throw std::runtime_error("line " + std::to_string(line_no) + ": feature '" + name +
                                 "' must be >= 1 (index 0 is reserved)");
    if (declared > 0 && value > declared)
        throw std::runtime_error("line " + std::to_string(line_no) + ": feature '" + name + "' value " +
                                 std::to_string(value) + " exceeds declared count " +
                                 std::to_string(declared));
}

}  // namespace detail

// Reads a JSONL interaction log, groups records by student (first-appearance
// order) and sorts each student's records by timestamp. With a declared
// vocabulary every categorical value is validated against it; without one the
// vocabulary is built from the observed maxima.
inline IngestResult ingest(const std::string& path,
                           const std::optional<FeatureVocabulary>& schema = std::nullopt) {
    std::ifstream in(path);
    require(in.good(), "ingest: cannot open " + path);

    IngestResult out;
    if (schema) out.vocab = *schema;
    std::map<std::string, size_t> index_of;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const std::exception& e) {
            throw std::runtime_error("line " + std::to_string(line_no) + ": malformed JSON (" +
                                     e.what() + ")");
        }
        if (!j.contains("student") || !j["student"].is_string())
            throw std::runtime_error("line " + std::to_string(line_no) +
                                     ": missing or non-string field 'student'");

        InteractionRecord r;
        r.exercise = static_cast<int32_t>(detail::get_int_field(j, "exercise", line_no));
        r.skill = static_cast<int32_t>(detail::get_int_field(j, "skill", line_no));
        r.tag = static_cast<int32_t>(detail::get_int_field(j, "tag", line_no));
        r.tagset = static_cast<int32_t>(detail::get_int_field(j, "tagset", line_no));
        r.bundle = static_cast<int32_t>(detail::get_int_field(j, "bundle", line_no));
        r.timestamp_ms = detail::get_int_field(j, "timestamp_ms", line_no);
        r.elapsed_ms = detail::get_int_field(j, "elapsed_ms", line_no);
        int64_t resp = detail::get_int_field(j, "response", line_no);
        if (resp != 0 && resp != 1)
            throw std::runtime_error("line " + std::to_string(line_no) +
                                     ": feature 'response' must be 0 or 1, got " + std::to_string(resp));
        if (r.elapsed_ms < 0)
            throw std::runtime_error("line " + std::to_string(line_no) + ": 'elapsed_ms' must be >= 0");
        r.response = static_cast<int8_t>(resp);

        const int32_t declared_ex = schema ? schema->exercises : 0;
        const int32_t declared_sk = schema ? schema->skills : 0;
        const int32_t declared_tag = schema ? schema->tags : 0;
        const int32_t declared_ts = schema ? schema->tagsets : 0;
        const int32_t declared_bu = schema ? schema->bundles : 0;
        detail::check_categorical("exercise", r.exercise, declared_ex, line_no);
        detail::check_categorical("skill", r.skill, declared_sk, line_no);
        detail::check_categorical("tag", r.tag, declared_tag, line_no);
        detail::check_categorical("tagset", r.tagset, declared_ts, line_no);
        detail::check_categorical("bundle", r.bundle, declared_bu, line_no);
        if (!schema) {
            out.vocab.exercises = std::max(out.vocab.exercises, r.exercise);
            out.vocab.skills = std::max(out.vocab.skills, r.skill);
            out.vocab.tags = std::max(out.vocab.tags, r.tag);
            out.vocab.tagsets = std::max(out.vocab.tagsets, r.tagset);
            out.vocab.bundles = std::max(out.vocab.bundles, r.bundle);
        }

        std::string sid = j["student"].get<std::string>();
        auto it = index_of.find(sid);
        if (it == index_of.end()) {
            it = index_of.emplace(sid, out.students.size()).first;
            out.students.push_back(StudentRecords{sid, {}});
        }
        out.students[it->second].records.push_back(r);
    }
    for (auto& s : out.students)
        std::stable_sort(s.records.begin(), s.records.end(),
                         [](const InteractionRecord& a, const InteractionRecord& b) {
                             return a.timestamp_ms < b.timestamp_ms;
                         });
    return out;
}

// The twelve candidate streams of one student, aligned so that position t only
// depends on interactions <= t. Shifted streams (ans, elapsed, lag) hold the
// start token (categorical 0 / continuous 0.0) at position 0. Continuous
// values are raw log1p(seconds); standardization happens at window build time.
struct FeatureStreams {
    std::array<std::vector<int32_t>, kNumCategoricalFeatures> cat;
    std::array<std::vector<double>, kNumContinuousFeatures> cont;
    std::vector<int8_t> target;

    size_t size() const { return target.size(); }
};

// Categorical stream slots that restart with a start token at each window
// boundary (everything derived from a previous interaction).
inline bool cat_slot_is_shifted(int slot) { return slot >= 5; }

inline FeatureStreams derive_features(const StudentRecords& student) {
    const auto& rec = student.records;
    size_t n = rec.size();
    FeatureStreams fs;
    for (auto& v : fs.cat) v.assign(n, 0);
    for (auto& v : fs.cont) v.assign(n, 0.0);
    fs.target.assign(n, 0);

    for (size_t t = 0; t < n; ++t) {
        fs.cat[0][t] = rec[t].exercise;
        fs.cat[1][t] = rec[t].skill;
        fs.cat[2][t] = rec[t].tag;
        fs.cat[3][t] = rec[t].tagset;
        fs.cat[4][t] = rec[t].bundle;
        fs.target[t] = rec[t].response;
        if (t >= 1) {
            fs.cat[5][t] = rec[t - 1].response + 1;
            fs.cat[6][t] = static_cast<int32_t>(1 + elapsed_seconds_bucket(rec[t - 1].elapsed_ms));
            fs.cont[0][t] = std::log1p(static_cast<double>(rec[t - 1].elapsed_ms) / 1000.0);
            int64_t lag_ms = rec[t].timestamp_ms - rec[t - 1].timestamp_ms;
            fs.cat[7][t] = static_cast<int32_t>(1 + lag_seconds_bucket(lag_ms));
            fs.cat[8][t] = static_cast<int32_t>(1 + lag_minutes_bucket(lag_ms));
            fs.cat[9][t] = static_cast<int32_t>(1 + lag_days_bucket(lag_ms));
            fs.cont[1][t] = std::log1p(static_cast<double>(lag_ms) / 1000.0);
        }
    }
    return fs;
}

// Mean/stddev of the continuous streams over non-start positions of the
// training split; fixed there, applied everywhere.
struct ContStats {
    std::array<double, kNumContinuousFeatures> mean{};
    std::array<double, kNumContinuousFeatures> stddev{{1.0, 1.0}};
};

inline ContStats compute_cont_stats(const std::vector<FeatureStreams>& train_streams) {
    ContStats st;
    for (int c = 0; c < kNumContinuousFeatures; ++c) {
        double sum = 0.0, sq = 0.0;
        size_t n = 0;
        for (const auto& fs : train_streams)
            for (size_t t = 1; t < fs.size(); ++t) {
                sum += fs.cont[static_cast<size_t>(c)][t];
                sq += fs.cont[static_cast<size_t>(c)][t] * fs.cont[static_cast<size_t>(c)][t];
                ++n;
            }
        if (n == 0) continue;
        double mean = sum / static_cast<double>(n);
        double var = sq / static_cast<double>(n) - mean * mean;
        st.mean[static_cast<size_t>(c)] = mean;
        st.stddev[static_cast<size_t>(c)] = var > 1e-12 ? std::sqrt(var) : 1.0;
    }
    return st;
}

// A fixed-length slice of one student's streams: right-padded with index 0,
// positions >= length masked out of loss and metrics. Shifted streams restart
// with the start token at position 0 of every window.
struct SequenceWindow {
    int length = 0;  // number of valid positions
    std::array<std::vector<int32_t>, kNumCategoricalFeatures> cat;
    std::array<std::vector<float>, kNumContinuousFeatures> cont;
    std::vector<int8_t> target;
    std::vector<uint8_t> valid;
};

inline std::vector<SequenceWindow> make_windows(const FeatureStreams& fs, int window_len,
                                                const ContStats& stats) {
    require(window_len >= 2, "make_windows: window length must be >= 2");
    std::vector<SequenceWindow> out;
    size_t n = fs.size();
    for (size_t begin = 0; begin < n; begin += static_cast<size_t>(window_len)) {
        size_t len = std::min(static_cast<size_t>(window_len), n - begin);
        SequenceWindow w;
        w.length = static_cast<int>(len);
        for (auto& v : w.cat) v.assign(static_cast<size_t>(window_len), 0);
        for (auto& v : w.cont) v.assign(static_cast<size_t>(window_len), 0.0f);
        w.target.assign(static_cast<size_t>(window_len), 0);
        w.valid.assign(static_cast<size_t>(window_len), 0);
        for (size_t t = 0; t < len; ++t) {
            for (int slot = 0; slot < kNumCategoricalFeatures; ++slot) {
                int32_t v = fs.cat[static_cast<size_t>(slot)][begin + t];
                if (t == 0 && cat_slot_is_shifted(slot)) v = 0;  // re-anchor at window start
                w.cat[static_cast<size_t>(slot)][t] = v;
            }
            for (int c = 0; c < kNumContinuousFeatures; ++c) {
                double v = 0.0;
                if (t > 0) {
                    double raw = fs.cont[static_cast<size_t>(c)][begin + t];
                    v = (raw - stats.mean[static_cast<size_t>(c)]) / stats.stddev[static_cast<size_t>(c)];
                }
                w.cont[static_cast<size_t>(c)][t] = static_cast<float>(v);
            }
            w.target[t] = fs.target[begin + t];
            w.valid[t] = 1;
        }
        out.push_back(std::move(w));
    }
    return out;
}

// By-student partition. Validation blocks of the five folds are disjoint.
struct DatasetSplit {
    std::vector<int> train;
    std::vector<int> validation;
    std::vector<int> test;
    int fold = 0;
};

inline DatasetSplit split_students(int n_students, double train_ratio, double val_ratio,
                                   double test_ratio, int fold, uint64_t seed) {
    require(std::abs(train_ratio + val_ratio + test_ratio - 1.0) < 1e-9,
            "split: ratios must sum to 1");
    require(fold >= 0 && fold < 5, "split: fold must be in 0..4");
    require(n_students > 0, "split: no students");

    std::vector<int> order(static_cast<size_t>(n_students));
    for (int i = 0; i < n_students; ++i) order[static_cast<size_t>(i)] = i;
    Rng rng = Rng(seed).fork("split");
    rng.shuffle(order);

    int n_val = static_cast<int>(std::llround(val_ratio * n_students));
    int n_test = static_cast<int>(std::llround(test_ratio * n_students));
    DatasetSplit s;
    s.fold = fold;
    require(n_val >= 1 && n_test >= 1 && n_val + n_test < n_students,
            "split: a partition would be empty at this size");

    std::vector<uint8_t> taken(static_cast<size_t>(n_students), 0);
    int val_begin = fold * n_val;
    for (int i = 0; i < n_val; ++i) {
        int idx = (val_begin + i) % n_students;
        s.validation.push_back(order[static_cast<size_t>(idx)]);
        taken[static_cast<size_t>(idx)] = 1;
    }
    int test_begin = val_begin + n_val;
    int placed = 0, cursor = 0;
    while (placed < n_test) {
        int idx = (test_begin + cursor) % n_students;
        ++cursor;
        if (taken[static_cast<size_t>(idx)]) continue;
        s.test.push_back(order[static_cast<size_t>(idx)]);
        taken[static_cast<size_t>(idx)] = 1;
        ++placed;
    }
    for (int idx = 0; idx < n_students; ++idx)
        if (!taken[static_cast<size_t>(idx)]) s.train.push_back(order[static_cast<size_t>(idx)]);
    require(!s.train.empty(), "split: train partition is empty");
    return s;
}

// ---------------------------------------------------------------------------
// Synthetic data: an item-response process with a practice-gain term (global
// history signal) and a lag-dependent forgetting term (local context signal).
//
//   logit = base + ability_s - difficulty_e
//         + practice_gain * log1p(#prior interactions on the same skill)
//         - forget_coef   * log1p(lag_seconds) / 12
//
// Responses are Bernoulli(sigmoid(logit)); elapsed time is log-normal with a
// mean that shrinks as the logit grows, so elapsed-time features carry signal
// too. Everything is reproducible from the seed alone.
// ---------------------------------------------------------------------------
struct SyntheticConfig {
    int n_students = 2000;
    int n_exercises = 50;
    int n_skills = 5;
    int n_tags = 8;
    int n_tagsets = 6;
    int n_bundles = 10;
    int min_interactions = 20;
    int max_interactions = 80;
    double ability_sd = 1.0;
    double difficulty_sd = 1.0;
    double base_logit = 0.2;
    double practice_gain = 0.25;
    double forget_coef = 0.8;
    double ability_boost = 0.0;  // added to every ability; drives the saturation limit
    uint64_t seed = 1;
};

struct SyntheticDataset {
    std::vector<StudentRecords> students;
    FeatureVocabulary vocab;
};

inline SyntheticDataset generate_synthetic(const SyntheticConfig& cfg) {
    require(cfg.n_students > 0 && cfg.n_exercises > 0, "generate_synthetic: sizes must be positive");
    require(cfg.min_interactions >= 1 && cfg.max_interactions >= cfg.min_interactions,
            "generate_synthetic: bad interaction range");

    SyntheticDataset out;
    out.vocab.exercises = cfg.n_exercises;
    out.vocab.skills = cfg.n_skills;
    out.vocab.tags = cfg.n_tags;
    out.vocab.tagsets = cfg.n_tagsets;
    out.vocab.bundles = cfg.n_bundles;

    Rng master(cfg.seed);
    Rng diff_rng = master.fork("difficulty");
    std::vector<double> difficulty(static_cast<size_t>(cfg.n_exercises));
    for (double& d : difficulty) d = diff_rng.normal(0.0, cfg.difficulty_sd);

    auto sigmoid = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };

    for (int s = 0; s < cfg.n_students; ++s) {
        Rng rng = master.fork("student" + std::to_string(s));
        double ability = cfg.ability_boost + rng.normal(0.0, cfg.ability_sd);
        int n = static_cast<int>(rng.uniform_int(cfg.min_interactions, cfg.max_interactions));

        StudentRecords sr;
        sr.student_id = "s" + std::to_string(s);
        std::vector<int> practice(static_cast<size_t>(cfg.n_skills) + 1, 0);
        int64_t ts = 0;
        for (int i = 0; i < n; ++i) {
            int64_t gap_ms = 0;
            if (i > 0) {
                if (rng.bernoulli(0.6))
                    gap_ms = rng.uniform_int(10'000, 120'000);
                else
                    gap_ms = rng.uniform_int(1'800'000, 259'200'000);  // 30 min .. 3 days
                ts += gap_ms;
            }
            int32_t e = static_cast<int32_t>(rng.uniform_int(1, cfg.n_exercises));
            int32_t skill = 1 + (e - 1) % cfg.n_skills;

            double lag_term =
                i == 0 ? 0.0 : std::log1p(static_cast<double>(gap_ms) / 1000.0) / 12.0;
            double logit = cfg.base_logit + ability - difficulty[static_cast<size_t>(e - 1)] +
                           cfg.practice_gain * std::log1p(static_cast<double>(practice[static_cast<size_t>(skill)])) -
                           cfg.forget_coef * lag_term;
            int response = rng.bernoulli(sigmoid(logit)) ? 1 : 0;

            double log_mean = std::log(20.0) - 0.25 * std::clamp(logit, -6.0, 6.0);
            double elapsed_s = std::exp(rng.normal(log_mean, 0.4));
            int64_t elapsed_ms =
                std::clamp<int64_t>(static_cast<int64_t>(std::llround(elapsed_s * 1000.0)), 500, 290'000);

            InteractionRecord r;
            r.exercise = e;
            r.skill = skill;
            r.tag = 1 + (e - 1) % cfg.n_tags;
            r.tagset = 1 + (e - 1) % cfg.n_tagsets;
            r.bundle = 1 + (e - 1) % cfg.n_bundles;
            r.timestamp_ms = ts;
            r.elapsed_ms = elapsed_ms;
            r.response = static_cast<int8_t>(response);
            sr.records.push_back(r);
            practice[static_cast<size_t>(skill)] += 1;
        }
        out.students.push_back(std::move(sr));
    }
    return out;
}

// ---------------------------------------------------------------------------
// File formats. Records: one JSON object per line. Windows: one per line with
// the padded streams. Both are plain-text and schema-checked on read.
// ---------------------------------------------------------------------------
inline void write_records_jsonl(const std::vector<StudentRecords>& students,
                                const std::string& path) {
    std::ofstream out(path);
    require(out.good(), "write_records_jsonl: cannot open " + path);
    for (const auto& s : students)
        for (const auto& r : s.records) {
            nlohmann::json j{{"student", s.student_id},   {"exercise", r.exercise},
                             {"skill", r.skill},          {"tag", r.tag},
                             {"tagset", r.tagset},        {"bundle", r.bundle},
                             {"timestamp_ms", r.timestamp_ms}, {"elapsed_ms", r.elapsed_ms},
                             {"response", static_cast<int>(r.response)}};
            out << j.dump() << '\n';
        }
}

inline void write_windows_jsonl(const std::vector<SequenceWindow>& windows, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), "write_windows_jsonl: cannot open " + path);
    for (const auto& w : windows) {
        nlohmann::json j;
        j["len"] = w.length;
        j["cat"] = w.cat;
        j["cont"] = w.cont;
        j["target"] = w.target;
        out << j.dump() << '\n';
    }
}

inline std::vector<SequenceWindow> read_windows_jsonl(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "read_windows_jsonl: cannot open " + path);
    std::vector<SequenceWindow> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const std::exception& e) {
            throw std::runtime_error("windows line " + std::to_string(line_no) + ": malformed JSON (" +
                                     e.what() + ")");
        }
        SequenceWindow w;
        w.length = j.at("len").get<int>();
        auto cat = j.at("cat").get<std::array<std::vector<int32_t>, kNumCategoricalFeatures>>();
        auto cont = j.at("cont").get<std::array<std::vector<float>, kNumContinuousFeatures>>();
        w.cat = std::move(cat);
        w.cont = std::move(cont);
        w.target = j.at("target").get<std::vector<int8_t>>();
        size_t L = w.target.size();
        w.valid.assign(L, 0);
        for (int t = 0; t < w.length; ++t) w.valid[static_cast<size_t>(t)] = 1;
        out.push_back(std::move(w));
    }
    return out;
}

// A fully prepared dataset: windows per split plus the vocabulary and the
// continuous-feature statistics that produced them.
struct PreparedDataset {
    FeatureVocabulary vocab;
    int window_length = 0;
    ContStats stats;
    std::vector<SequenceWindow> train;
    std::vector<SequenceWindow> validation;
    std::vector<SequenceWindow> test;
};

inline PreparedDataset prepare_dataset(const std::vector<StudentRecords>& students,
                                       const FeatureVocabulary& vocab, int window_len,
                                       double train_ratio, double val_ratio, double test_ratio,
                                       int fold, uint64_t seed) {
    PreparedDataset d;
    d.vocab = vocab;
    d.window_length = window_len;
    DatasetSplit split = split_students(static_cast<int>(students.size()), train_ratio, val_ratio,
                                        test_ratio, fold, seed);

    std::vector<FeatureStreams> train_streams;
    train_streams.reserve(split.train.size());
    for (int idx : split.train)
        train_streams.push_back(derive_features(students[static_cast<size_t>(idx)]));
    d.stats = compute_cont_stats(train_streams);

    for (const auto& fs : train_streams) {
        auto ws = make_windows(fs, window_len, d.stats);
        d.train.insert(d.train.end(), ws.begin(), ws.end());
    }
    for (int idx : split.validation) {
        auto ws = make_windows(derive_features(students[static_cast<size_t>(idx)]), window_len, d.stats);
        d.validation.insert(d.validation.end(), ws.begin(), ws.end());
    }
    for (int idx : split.test) {
        auto ws = make_windows(derive_features(students[static_cast<size_t>(idx)]), window_len, d.stats);
        d.test.insert(d.test.end(), ws.begin(), ws.end());
    }
    return d;
}

inline void save_prepared(const PreparedDataset& d, const std::string& dir) {
    nlohmann::json meta;
    meta["vocab"] = vocab_to_json(d.vocab);
    meta["window_length"] = d.window_length;
    meta["cont_mean"] = d.stats.mean;
    meta["cont_std"] = d.stats.stddev;
    std::ofstream mf(dir + "/prepared.json");
    require(mf.good(), "save_prepared: cannot open " + dir + "/prepared.json");
    mf << meta.dump(2) << '\n';
    write_windows_jsonl(d.train, dir + "/windows_train.jsonl");
    write_windows_jsonl(d.validation, dir + "/windows_val.jsonl");
    write_windows_jsonl(d.test, dir + "/windows_test.jsonl");
}

inline PreparedDataset load_prepared(const std::string& dir) {
    std::ifstream mf(dir + "/prepared.json");
    require(mf.good(), "load_prepared: cannot open " + dir + "/prepared.json");
    nlohmann::json meta = nlohmann::json::parse(mf);
    PreparedDataset d;
    d.vocab = vocab_from_json(meta.at("vocab"));
    d.window_length = meta.at("window_length").get<int>();
    d.stats.mean = meta.at("cont_mean").get<std::array<double, kNumContinuousFeatures>>();
    d.stats.stddev = meta.at("cont_std").get<std::array<double, kNumContinuousFeatures>>();
    d.train = read_windows_jsonl(dir + "/windows_train.jsonl");
    d.validation = read_windows_jsonl(dir + "/windows_val.jsonl");
    d.test = read_windows_jsonl(dir + "/windows_test.jsonl");
    return d;
}

}  // namespace ktnas
