// Single entry point wiring synthesis, pseudo-labeling, training, correction
// and evaluation into reproducible runs. Every command validates its whole
// config up front (reporting all violations at once), writes only under
// --out, and drops a run.json provenance record there.

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "contactseq/features.hpp"
#include "contactseq/gplc.hpp"
#include "contactseq/metrics.hpp"
#include "contactseq/model.hpp"
#include "contactseq/pseudolabel.hpp"
#include "contactseq/synth.hpp"
#include "contactseq/track_io.hpp"
#include "contactseq/train.hpp"

#ifndef CONTACTSEQ_VERSION
#define CONTACTSEQ_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace contactseq;

namespace {

std::string fmt6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string fmt_sci(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9e", v);
    return buf;
}

std::string one_line(std::string s) {
    for (char& c : s)
        if (c == '\n' || c == '\r') c = ' ';
    return s;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Index-keyed worker pool. Each index's work is independent and lands in a
// preassigned slot, so results never depend on scheduling or thread count.
void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    threads = std::max(1, std::min(threads, n));
    if (threads <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::mutex err_mu;
    std::exception_ptr err;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int w = 0; w < threads; ++w)
        pool.emplace_back([&] {
            for (int i; (i = next.fetch_add(1)) < n;) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mu);
                    if (!err) err = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

// Collects every config violation before failing, so one run reports them all.
struct Violations {
    std::vector<std::string> items;

    void add(const std::string& field, const std::string& why) {
        items.push_back(field + " (" + why + ")");
    }
    void require_dir(const std::string& path, const std::string& field) {
        if (path.empty())
            add(field, "required");
        else if (!fs::is_directory(path))
            add(field, "not a directory: " + path);
    }
    void optional_dir(const std::string& path, const std::string& field) {
        if (!path.empty() && !fs::is_directory(path)) add(field, "not a directory: " + path);
    }
    void require_file(const std::string& path, const std::string& field) {
        if (path.empty())
            add(field, "required");
        else if (!fs::is_regular_file(path))
            add(field, "not a file: " + path);
    }
    void section(const std::string& field, const std::function<void()>& validate) {
        try {
            validate();
        } catch (const ConfigError& e) {
            add(field, e.what());
        }
    }
    void raise() const {
        if (items.empty()) return;
        std::string msg = "invalid config: ";
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (i) msg += "; ";
            msg += items[i];
        }
        throw ConfigError(msg);
    }
};

void write_run_json(const fs::path& out_dir, const std::string& command, const json& config,
                    std::uint64_t seed, std::chrono::steady_clock::time_point t0) {
    json j{{"command", command},
           {"config", config},
           {"cwd", fs::current_path().string()},
           {"seed", seed},
           {"version", CONTACTSEQ_VERSION},
           {"wall_time_sec", seconds_since(t0)}};
    fs::create_directories(out_dir);
    std::ofstream f(out_dir / "run.json");
    if (!f) throw TrackIoError("cannot write " + (out_dir / "run.json").string());
    f << j.dump(2) << "\n";
}

json load_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw TrackIoError("cannot read " + path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return j;
}

// Track ids under a directory: track subdirectories when present, otherwise
// flat <id>.txt label files. Always sorted.
std::vector<std::string> track_ids_under(const fs::path& dir) {
    std::vector<std::string> ids;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_directory()) ids.push_back(e.path().filename().string());
    if (ids.empty())
        for (const auto& e : fs::directory_iterator(dir))
            if (e.is_regular_file() && e.path().extension() == ".txt")
                ids.push_back(e.path().stem().string());
    std::sort(ids.begin(), ids.end());
    if (ids.empty()) throw TrackIoError("no tracks or label files under " + dir.string());
    return ids;
}

// ---------------------------------------------------------------------------
// experiment config (train command)

const std::vector<std::string> kModes = {"supervised", "noisy_only",     "joint",
                                         "plc",        "gplc",           "pseudo_labeling"};

bool mode_needs_noisy(const std::string& m) { return m != "supervised"; }
bool mode_needs_trusted(const std::string& m) { return m != "noisy_only"; }

struct ExperimentConfig {
    std::string noisy;    // corpus split directories
    std::string trusted;
    std::string test;
    std::string labels;   // optional per-track label override for the noisy split
    std::string mode = "gplc";
    std::uint64_t seed = 0;
    ModelConfig model;
    PseudoLabelConfig pseudo;  // feature extraction parameters
    TrainConfig train;         // supervised / noisy_only / joint / pseudo_labeling
    GplcConfig gplc;           // plc / gplc (carries its own step parameters)
};

void exp_from_json(const json& j, ExperimentConfig& c) {
    c.noisy = j.value("noisy", c.noisy);
    c.trusted = j.value("trusted", c.trusted);
    c.test = j.value("test", c.test);
    c.labels = j.value("labels", c.labels);
    c.mode = j.value("mode", c.mode);
    c.seed = j.value("seed", c.seed);
    if (j.contains("model")) from_json(j.at("model"), c.model);
    if (j.contains("pseudo")) from_json(j.at("pseudo"), c.pseudo);
    if (j.contains("train")) from_json(j.at("train"), c.train);
    if (j.contains("gplc")) from_json(j.at("gplc"), c.gplc);
}

json exp_to_json(const ExperimentConfig& c) {
    json jm, jp, jt, jg;
    to_json(jm, c.model);
    to_json(jp, c.pseudo);
    to_json(jt, c.train);
    to_json(jg, c.gplc);
    return json{{"noisy", c.noisy},   {"trusted", c.trusted}, {"test", c.test},
                {"labels", c.labels}, {"mode", c.mode},       {"seed", c.seed},
                {"model", jm},        {"pseudo", jp},         {"train", jt},
                {"gplc", jg}};
}

void validate_experiment(const ExperimentConfig& c, Violations& v) {
    if (std::find(kModes.begin(), kModes.end(), c.mode) == kModes.end())
        v.add("mode", "must be one of supervised|noisy_only|joint|plc|gplc|pseudo_labeling, got '" +
                          c.mode + "'");
    if (mode_needs_noisy(c.mode)) v.require_dir(c.noisy, "noisy");
    if (mode_needs_trusted(c.mode)) v.require_dir(c.trusted, "trusted");
    if (!mode_needs_noisy(c.mode)) v.optional_dir(c.noisy, "noisy");
    if (!mode_needs_trusted(c.mode)) v.optional_dir(c.trusted, "trusted");
    v.optional_dir(c.test, "test");
    v.optional_dir(c.labels, "labels");
    v.section("model", [&] { c.model.validate(); });
    v.section("pseudo", [&] { c.pseudo.validate(); });
    v.section("train", [&] { c.train.validate(); });
    v.section("gplc", [&] { c.gplc.validate(); });
    if (c.model.input_dim != kFeatureDim)
        v.add("model.input_dim", "must equal the feature dimension " +
                                     std::to_string(kFeatureDim));
}

// One corpus split turned into training material: per-track features, working
// labels and (when labels_gt.txt exists) planted truth.
struct SplitData {
    std::vector<std::string> ids;
    std::vector<SeqExample> ex;
    std::vector<std::optional<LabelSeq>> truth;

    bool full_truth() const {
        for (const auto& t : truth)
            if (!t) return false;
        return !truth.empty();
    }
    std::vector<LabelSeq> truth_seqs() const {
        std::vector<LabelSeq> out;
        out.reserve(truth.size());
        for (const auto& t : truth) out.push_back(*t);
        return out;
    }
};

SplitData load_split(const fs::path& dir, const PseudoLabelConfig& fcfg, int threads,
                     const std::string& labels_override) {
    std::vector<fs::path> subdirs;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_directory() && fs::exists(e.path() / "manifest")) subdirs.push_back(e.path());
    std::sort(subdirs.begin(), subdirs.end());
    if (subdirs.empty()) throw TrackIoError("no tracks under " + dir.string());

    const int n = int(subdirs.size());
    SplitData split;
    split.ids.resize(n);
    split.ex.resize(n);
    split.truth.resize(n);
    parallel_for(n, threads, [&](int i) {
        Track t = load_track(subdirs[i]);
        SeqExample ex;
        ex.id = t.id;
        ex.features = extract_features(t, fcfg);
        if (!labels_override.empty()) {
            ex.labels = find_labels(labels_override, t.id);
        } else {
            fs::path lp = subdirs[i] / "labels.txt";
            ex.labels = fs::exists(lp) ? load_labels(lp) : LabelSeq(t.size());
        }
        if (ex.labels.size() != t.size())
            throw TrackIoError("label length mismatch for " + t.id);
        fs::path gp = subdirs[i] / "labels_gt.txt";
        if (fs::exists(gp)) {
            LabelSeq gt = load_labels(gp);
            if (gt.size() != t.size()) throw TrackIoError("truth length mismatch for " + t.id);
            split.truth[i] = std::move(gt);
        }
        split.ids[i] = t.id;
        split.ex[i] = std::move(ex);
    });
    return split;
}

// ---------------------------------------------------------------------------
// CSV artifacts

const char* kMetricsHeader =
    "method,tracks,frame_acc,boundary_precision,boundary_recall,boundary_f1,"
    "peripheral_acc,edit_score,correct_track_ratio\n";

std::string metrics_row(const std::string& name, const EvalSummary& s) {
    std::string r = name;
    r += "," + std::to_string(s.per_track.size());
    r += "," + fmt6(s.frame_acc);
    r += "," + fmt6(s.boundary_precision);
    r += "," + fmt6(s.boundary_recall);
    r += "," + fmt6(s.boundary_f1);
    r += "," + fmt6(s.peripheral_acc);
    r += "," + fmt6(s.edit);
    r += "," + fmt6(s.correct_track_ratio);
    r += "\n";
    return r;
}

void write_metrics_csv(const fs::path& path,
                       const std::vector<std::pair<std::string, EvalSummary>>& rows) {
    std::ofstream f(path);
    if (!f) throw TrackIoError("cannot write " + path.string());
    f << kMetricsHeader;
    for (const auto& [name, s] : rows) f << metrics_row(name, s);
}

void write_per_track_jsonl(const fs::path& path, const EvalSummary& s) {
    std::ofstream f(path);
    if (!f) throw TrackIoError("cannot write " + path.string());
    for (const TrackMetrics& t : s.per_track) {
        json j{{"id", t.id},
               {"frame_acc", t.frame_acc},
               {"boundary_precision", t.boundary.precision},
               {"boundary_recall", t.boundary.recall},
               {"boundary_f1", t.boundary.f1},
               {"edit_score", t.edit},
               {"correct", t.correct}};
        j["peripheral_acc"] = t.peripheral_acc ? json(*t.peripheral_acc) : json();
        f << j.dump() << "\n";
    }
}

void write_curve_csv(const fs::path& path, const std::vector<CurvePoint>& curve) {
    std::ofstream f(path);
    if (!f) throw TrackIoError("cannot write " + path.string());
    f << "iter,loss,val_acc\n";
    for (const CurvePoint& p : curve)
        f << p.iter << "," << fmt6(p.loss) << "," << fmt6(p.val_acc) << "\n";
}

void write_rounds_csv(const fs::path& path, const std::vector<GplcRoundStats>& rounds) {
    std::ofstream f(path);
    if (!f) throw TrackIoError("cannot write " + path.string());
    f << "round,delta,flips,written,skipped_unlabeled,labeled,label_acc,val_acc\n";
    for (const GplcRoundStats& r : rounds)
        f << r.round << "," << fmt6(r.delta) << "," << r.flips << "," << r.written << ","
          << r.skipped_unlabeled << "," << r.labeled << "," << fmt6(r.label_acc) << ","
          << fmt6(r.val_acc) << "\n";
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
    std::string spec;    // single-scenario mode
    std::string corpus;  // corpus mode
    int n = 1;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string out;
    int threads = 1;
};

int cmd_synth(const SynthArgs& a) {
    auto t0 = std::chrono::steady_clock::now();
    Violations v;
    if (a.spec.empty() == a.corpus.empty())
        v.add("spec/corpus", "exactly one of --spec and --corpus is required");
    if (!a.spec.empty()) v.require_file(a.spec, "spec");
    if (!a.corpus.empty()) v.require_file(a.corpus, "corpus");
    if (a.n < 1) v.add("n", "must be at least 1");
    if (a.out.empty()) v.add("out", "required");
    if (a.threads < 1) v.add("threads", "must be at least 1");
    v.raise();

    fs::path out(a.out);
    fs::create_directories(out);

    if (!a.corpus.empty()) {
        json cj = load_json_file(a.corpus);
        CorpusConfig cfg;
        from_json(cj, cfg);
        if (a.seed_given) cfg.seed = a.seed;
        Violations cv;
        cv.section("corpus", [&] { cfg.validate(); });
        cv.raise();
        CorpusStats stats = generate_corpus(cfg, out);
        json echo;
        to_json(echo, cfg);
        write_run_json(out, "synth", json{{"corpus", echo}}, cfg.seed, t0);
        std::printf("synth: corpus noisy=%d trusted=%d test=%d coverage=%s label_acc=%s -> %s\n",
                    cfg.noisy, cfg.trusted, cfg.test, fmt6(stats.coverage()).c_str(),
                    fmt6(stats.label_accuracy()).c_str(), out.string().c_str());
        return 0;
    }

    ScenarioSpec spec = load_scenario(a.spec);
    Violations sv;
    sv.section("spec", [&] { spec.validate(); });
    sv.raise();

    std::vector<std::string> ids(a.n);
    for (int i = 0; i < a.n; ++i) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%s_%03d", spec.name.c_str(), i);
        ids[i] = buf;
    }
    std::atomic<long long> frames{0};
    parallel_for(a.n, a.threads, [&](int i) {
        SynthResult r = generate_track(spec, a.seed ^ fnv1a_str(ids[i]), ids[i]);
        fs::path dir = out / ids[i];
        save_track(r.track, dir, true);
        save_labels(r.truth, dir / "labels_gt.txt");
        frames += static_cast<long long>(r.truth.size());
    });

    json echo;
    to_json(echo, spec);
    write_run_json(out, "synth", json{{"spec", echo}, {"n", a.n}}, a.seed, t0);
    std::printf("synth: %d tracks, %lld frames -> %s\n", a.n, frames.load(),
                out.string().c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// pseudolabel

struct PseudoArgs {
    std::string config;
    std::string in;
    std::string out;
    int threads = 1;
};

int cmd_pseudolabel(const PseudoArgs& a) {
    auto t0 = std::chrono::steady_clock::now();
    PseudoLabelConfig cfg;
    if (!a.config.empty()) {
        Violations fv;
        fv.require_file(a.config, "config");
        fv.raise();
        from_json(load_json_file(a.config), cfg);
    }
    Violations v;
    v.require_dir(a.in, "in");
    if (a.out.empty()) v.add("out", "required");
    if (a.threads < 1) v.add("threads", "must be at least 1");
    v.section("config", [&] { cfg.validate(); });
    v.raise();

    std::vector<fs::path> subdirs;
    for (const auto& e : fs::directory_iterator(a.in))
        if (e.is_directory() && fs::exists(e.path() / "manifest")) subdirs.push_back(e.path());
    std::sort(subdirs.begin(), subdirs.end());
    if (subdirs.empty()) throw TrackIoError("no tracks under " + a.in);

    const int n = int(subdirs.size());
    struct Row {
        std::string id;
        PseudoLabelResult res;
        double labeled_acc = std::nan("");
    };
    std::vector<Row> rows(n);
    parallel_for(n, a.threads, [&](int i) {
        Track t = load_track(subdirs[i]);
        Row r;
        r.id = t.id;
        r.res = generate_pseudolabels(t, cfg);
        fs::path gp = subdirs[i] / "labels_gt.txt";
        if (fs::exists(gp)) {
            if (auto acc = labeled_accuracy(r.res.labels, load_labels(gp))) r.labeled_acc = *acc;
        }
        rows[i] = std::move(r);
    });

    fs::path out(a.out);
    fs::create_directories(out / "labels");
    std::ofstream csv(out / "pseudolabel.csv");
    if (!csv) throw TrackIoError("cannot write " + (out / "pseudolabel.csv").string());
    csv << "id,frames,labeled,coverage,cancelled,extended,frame_errors,labeled_acc\n";
    for (const Row& r : rows) {
        save_labels(r.res.labels, out / "labels" / (r.id + ".txt"));
        csv << r.id << "," << r.res.labels.size() << "," << r.res.labels.count_labeled() << ","
            << fmt6(r.res.coverage()) << "," << r.res.cancelled << "," << r.res.extended << ","
            << r.res.frame_errors << "," << fmt6(r.labeled_acc) << "\n";
        std::printf("%s coverage=%.1f%% cancelled=%d\n", r.id.c_str(), 100.0 * r.res.coverage(),
                    r.res.cancelled);
    }
    csv.close();

    json echo;
    to_json(echo, cfg);
    write_run_json(out, "pseudolabel", json{{"config", echo}, {"in", a.in}}, 0, t0);
    return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
    std::string config;
    std::string noisy, trusted, test, labels, mode, out;
    std::uint64_t seed = 0;
    bool seed_given = false;
    int threads = 1;
};

// Runs the supervised test-split evaluation shared by every mode.
void eval_on_test(const Model& model, const SplitData& test, const std::string& mode,
                  const fs::path& out) {
    std::vector<LabelSeq> preds, truths;
    preds.reserve(test.ex.size());
    fs::create_directories(out / "predictions");
    for (std::size_t i = 0; i < test.ex.size(); ++i) {
        LabelSeq p = model.predict(test.ex[i].features);
        save_labels(p, out / "predictions" / (test.ids[i] + ".txt"));
        preds.push_back(std::move(p));
        truths.push_back(test.truth[i] ? *test.truth[i] : test.ex[i].labels);
    }
    EvalSummary s = evaluate(preds, truths, test.ids);
    write_metrics_csv(out / "test_metrics.csv", {{mode, s}});
    std::printf("test: frame_acc=%s boundary_f1=%s edit=%s\n", fmt6(s.frame_acc).c_str(),
                fmt6(s.boundary_f1).c_str(), fmt6(s.edit).c_str());
}

int cmd_train(const TrainArgs& a) {
    auto t0 = std::chrono::steady_clock::now();
    ExperimentConfig cfg;
    if (!a.config.empty()) {
        Violations fv;
        fv.require_file(a.config, "config");
        fv.raise();
        exp_from_json(load_json_file(a.config), cfg);
    }
    if (!a.noisy.empty()) cfg.noisy = a.noisy;
    if (!a.trusted.empty()) cfg.trusted = a.trusted;
    if (!a.test.empty()) cfg.test = a.test;
    if (!a.labels.empty()) cfg.labels = a.labels;
    if (!a.mode.empty()) cfg.mode = a.mode;
    if (a.seed_given) cfg.seed = a.seed;

    Violations v;
    if (a.out.empty()) v.add("out", "required");
    if (a.threads < 1) v.add("threads", "must be at least 1");
    validate_experiment(cfg, v);
    v.raise();

    fs::path out(a.out);
    fs::create_directories(out);

    SplitData noisy, trusted, test;
    if (!cfg.noisy.empty()) noisy = load_split(cfg.noisy, cfg.pseudo, a.threads, cfg.labels);
    if (!cfg.trusted.empty()) trusted = load_split(cfg.trusted, cfg.pseudo, a.threads, "");
    if (!cfg.test.empty()) test = load_split(cfg.test, cfg.pseudo, a.threads, "");

    std::optional<Model> model;
    if (cfg.mode == "plc" || cfg.mode == "gplc") {
        GplcConfig gc = cfg.gplc;
        gc.guided = cfg.mode == "gplc";
        gc.train.seed = cfg.seed;
        const std::vector<LabelSeq>* truth_ptr = nullptr;
        std::vector<LabelSeq> truth;
        if (noisy.full_truth()) {
            truth = noisy.truth_seqs();
            truth_ptr = &truth;
        }
        GplcResult r = run_gplc(cfg.model, noisy.ex, trusted.ex, gc, truth_ptr);
        write_rounds_csv(out / "rounds.csv", r.rounds);
        fs::create_directories(out / "corrected");
        for (std::size_t i = 0; i < noisy.ids.size(); ++i)
            save_labels(r.corrected[i], out / "corrected" / (noisy.ids[i] + ".txt"));
        const GplcRoundStats& last = r.rounds.back();
        std::printf("%s: rounds=%d delta=%s label_acc=%s val_acc=%s\n", cfg.mode.c_str(),
                    int(r.rounds.size()), fmt6(r.final_delta).c_str(),
                    fmt6(last.label_acc).c_str(), fmt6(last.val_acc).c_str());
        model.emplace(std::move(r.f));
    } else if (cfg.mode == "pseudo_labeling") {
        // Teacher trains on the trusted set; its confident predictions become
        // the noisy split's labels (gate width = gplc.delta_end); the student
        // retrains on both.
        TrainConfig tt = cfg.train;
        tt.seed = cfg.seed ^ 0x746561636865ull;
        TrainResult teacher = train(cfg.model, trusted.ex, {}, tt);
        const double delta = cfg.gplc.delta_end;
        std::vector<SeqExample> pseudo = noisy.ex;
        fs::create_directories(out / "pseudo");
        for (std::size_t i = 0; i < pseudo.size(); ++i) {
            std::vector<double> p = teacher.model.predict_probs(pseudo[i].features);
            for (std::size_t t = 0; t < p.size(); ++t)
                pseudo[i].labels[t] = std::abs(p[t] - 0.5) >= 0.5 - delta
                                          ? (p[t] >= 0.5 ? Label::Contact : Label::NoContact)
                                          : Label::Unlabeled;
            save_labels(pseudo[i].labels, out / "pseudo" / (noisy.ids[i] + ".txt"));
        }
        std::vector<SeqExample> both = pseudo;
        both.insert(both.end(), trusted.ex.begin(), trusted.ex.end());
        TrainConfig tc = cfg.train;
        tc.seed = cfg.seed;
        TrainResult r = train(cfg.model, both, trusted.ex, tc);
        write_curve_csv(out / "curve.csv", r.curve);
        std::printf("pseudo_labeling: best_val=%s best_iter=%d\n", fmt6(r.best_val).c_str(),
                    r.best_iter);
        model.emplace(std::move(r.model));
    } else {
        std::vector<SeqExample> train_set;
        std::vector<SeqExample> val_set;
        if (cfg.mode == "supervised") {
            train_set = trusted.ex;
        } else if (cfg.mode == "noisy_only") {
            train_set = noisy.ex;
            val_set = trusted.ex;  // empty when no trusted split was given
        } else {  // joint
            train_set = noisy.ex;
            train_set.insert(train_set.end(), trusted.ex.begin(), trusted.ex.end());
            val_set = trusted.ex;
        }
        TrainConfig tc = cfg.train;
        tc.seed = cfg.seed;
        TrainResult r = train(cfg.model, train_set, val_set, tc);
        write_curve_csv(out / "curve.csv", r.curve);
        std::printf("%s: tracks=%d best_val=%s best_iter=%d\n", cfg.mode.c_str(),
                    int(train_set.size()), fmt6(r.best_val).c_str(), r.best_iter);
        model.emplace(std::move(r.model));
    }

    model->save(out / "model.bin");
    if (!cfg.test.empty()) eval_on_test(*model, test, cfg.mode, out);
    write_run_json(out, "train", exp_to_json(cfg), cfg.seed, t0);
    return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
    std::string pred, gt, out;
    std::string name = "pred";
    int tol = 6;
    bool jsonl = false;
};

int cmd_eval(const EvalArgs& a) {
    auto t0 = std::chrono::steady_clock::now();
    Violations v;
    v.require_dir(a.pred, "pred");
    v.require_dir(a.gt, "gt");
    if (a.out.empty()) v.add("out", "required");
    if (a.tol < 0) v.add("tol", "must be non-negative");
    v.raise();

    std::vector<std::string> ids = track_ids_under(a.gt);
    std::vector<LabelSeq> preds, truths;
    preds.reserve(ids.size());
    for (const std::string& id : ids) {
        LabelSeq gt = find_labels(a.gt, id);
        LabelSeq pred = find_labels(a.pred, id);
        if (pred.size() != gt.size())
            throw TrackIoError("prediction length mismatch for " + id);
        truths.push_back(std::move(gt));
        preds.push_back(std::move(pred));
    }
    EvalSummary s = evaluate(preds, truths, ids, a.tol);

    // --out names the report file itself (directory outputs live beside it).
    fs::path csv(a.out);
    if (!csv.parent_path().empty()) fs::create_directories(csv.parent_path());
    write_metrics_csv(csv, {{a.name, s}});
    if (a.jsonl) {
        fs::path jl = csv;
        jl.replace_extension(".jsonl");
        write_per_track_jsonl(jl, s);
    }
    write_run_json(csv.parent_path().empty() ? fs::path(".") : csv.parent_path(), "eval",
                   json{{"pred", a.pred},
                        {"gt", a.gt},
                        {"name", a.name},
                        {"tol", a.tol},
                        {"jsonl", a.jsonl}},
                   0, t0);
    std::fputs((kMetricsHeader + metrics_row(a.name, s)).c_str(), stdout);
    return 0;
}

// ---------------------------------------------------------------------------
// gradcheck

struct GradArgs {
    int seeds = 20;
    int frames = 5;
    double eps = 1e-5;
    double tol = 1e-4;
    std::string out;
};

int cmd_gradcheck(const GradArgs& a) {
    auto t0 = std::chrono::steady_clock::now();
    Violations v;
    if (a.seeds < 1) v.add("seeds", "must be at least 1");
    if (a.frames < 1) v.add("frames", "must be at least 1");
    if (!(a.eps > 0)) v.add("eps", "must be positive");
    if (!(a.tol > 0)) v.add("tol", "must be positive");
    if (a.out.empty()) v.add("out", "required");
    v.raise();

    ModelConfig mc;
    mc.input_dim = 3;
    mc.enc_hidden = 4;
    mc.hidden = 3;
    mc.layers = 2;
    mc.head_hidden1 = 4;
    mc.head_hidden2 = 3;

    fs::path out(a.out);
    fs::create_directories(out);
    std::ofstream csv(out / "gradcheck.csv");
    if (!csv) throw TrackIoError("cannot write " + (out / "gradcheck.csv").string());
    csv << "seed,params,max_rel_err\n";

    const double w0 = 0.8, w1 = 1.3;
    double worst = 0.0;
    for (int s = 0; s < a.seeds; ++s) {
        Model m(mc);
        m.init(std::uint64_t(s) * 1000003ull + 17ull);

        std::mt19937_64 rng(std::uint64_t(s) ^ 0x67726164ull);
        std::normal_distribution<double> g(0.0, 1.0);
        Eigen::MatrixXd x(mc.input_dim, a.frames);
        for (int t = 0; t < a.frames; ++t)
            for (int i = 0; i < mc.input_dim; ++i) x(i, t) = g(rng);
        LabelSeq y(std::size_t(a.frames));
        std::uniform_int_distribution<int> lab(-1, 1);
        bool any = false;
        for (int t = 0; t < a.frames; ++t) {
            int val = lab(rng);
            y[std::size_t(t)] = Label(val);
            any = any || val >= 0;
        }
        if (!any) y[0] = Label::Contact;

        ForwardCache cache;
        Eigen::VectorXd z = m.forward(x, &cache);
        Eigen::VectorXd grad = m.backward(cache, sequence_loss_grad(z, y, w0, w1));

        double worst_s = 0.0;
        for (Eigen::Index i = 0; i < grad.size(); ++i) {
            double saved = m.params()(i);
            m.params()(i) = saved + a.eps;
            double lp = sequence_loss(m.forward(x), y, w0, w1);
            m.params()(i) = saved - a.eps;
            double lm = sequence_loss(m.forward(x), y, w0, w1);
            m.params()(i) = saved;
            double num = (lp - lm) / (2.0 * a.eps);
            double rel = std::abs(num - grad(i)) / std::max(1.0, std::abs(grad(i)));
            worst_s = std::max(worst_s, rel);
        }
        csv << s << "," << grad.size() << "," << fmt_sci(worst_s) << "\n";
        worst = std::max(worst, worst_s);
    }
    csv.close();

    write_run_json(out, "gradcheck",
                   json{{"seeds", a.seeds}, {"frames", a.frames}, {"eps", a.eps}, {"tol", a.tol}},
                   0, t0);
    bool pass = worst <= a.tol;
    std::printf("gradcheck: seeds=%d max_rel_err=%s tol=%s %s\n", a.seeds,
                fmt_sci(worst).c_str(), fmt_sci(a.tol).c_str(), pass ? "PASS" : "FAIL");
    if (!pass) {
        std::fprintf(stderr, "error: gradcheck: max_rel_err=%s exceeds tol=%s\n",
                     fmt_sci(worst).c_str(), fmt_sci(a.tol).c_str());
        return 1;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// report

struct ReportArgs {
    std::string gt;
    std::vector<std::string> preds;  // name=dir
    std::string tracks;              // enables the trivial baseline rows
    std::string out;
    int tol = 6;
    int threads = 1;
};

int cmd_report(const ReportArgs& a) {
    auto t0 = std::chrono::steady_clock::now();
    Violations v;
    v.require_dir(a.gt, "gt");
    if (a.out.empty()) v.add("out", "required");
    if (a.preds.empty() && a.tracks.empty())
        v.add("pred/tracks", "at least one --pred or --tracks is required");
    std::vector<std::pair<std::string, std::string>> named;
    for (const std::string& p : a.preds) {
        auto eq = p.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == p.size()) {
            v.add("pred", "expected NAME=DIR, got '" + p + "'");
            continue;
        }
        named.emplace_back(p.substr(0, eq), p.substr(eq + 1));
        v.require_dir(named.back().second, "pred " + named.back().first);
    }
    v.optional_dir(a.tracks, "tracks");
    if (a.tol < 0) v.add("tol", "must be non-negative");
    if (a.threads < 1) v.add("threads", "must be at least 1");
    v.raise();

    std::vector<std::string> ids = track_ids_under(a.gt);
    std::vector<LabelSeq> truths;
    truths.reserve(ids.size());
    for (const std::string& id : ids) truths.push_back(find_labels(a.gt, id));

    std::vector<std::pair<std::string, EvalSummary>> rows;

    if (!a.tracks.empty()) {
        // Trivial reference predictors: everything-in-contact, and contact
        // whenever the hand/object rasters overlap.
        const int n = int(ids.size());
        std::vector<LabelSeq> fixed(n), iou(n);
        parallel_for(n, a.threads, [&](int i) {
            Track t = load_track(fs::path(a.tracks) / ids[i]);
            Eigen::MatrixXd f = extract_features(t, PseudoLabelConfig{});
            LabelSeq all(t.size(), Label::Contact), ov(t.size());
            for (std::size_t u = 0; u < t.size(); ++u)
                ov[u] = f(0, Eigen::Index(u)) > 0.0 ? Label::Contact : Label::NoContact;
            fixed[i] = std::move(all);
            iou[i] = std::move(ov);
        });
        rows.emplace_back("fixed_contact", evaluate(fixed, truths, ids, a.tol));
        rows.emplace_back("iou_positive", evaluate(iou, truths, ids, a.tol));
    }

    for (const auto& [name, dir] : named) {
        std::vector<LabelSeq> preds;
        preds.reserve(ids.size());
        for (std::size_t i = 0; i < ids.size(); ++i) {
            LabelSeq p = find_labels(dir, ids[i]);
            if (p.size() != truths[i].size())
                throw TrackIoError("prediction length mismatch for " + ids[i] + " under " + dir);
            preds.push_back(std::move(p));
        }
        rows.emplace_back(name, evaluate(preds, truths, ids, a.tol));
    }

    fs::path out(a.out);
    fs::create_directories(out);
    write_metrics_csv(out / "report.csv", rows);
    json jp = json::array();
    for (const auto& [name, dir] : named) jp.push_back(name + "=" + dir);
    write_run_json(out, "report",
                   json{{"gt", a.gt}, {"pred", jp}, {"tracks", a.tracks}, {"tol", a.tol}}, 0, t0);
    std::fputs(kMetricsHeader, stdout);
    for (const auto& [name, s] : rows) std::fputs(metrics_row(name, s).c_str(), stdout);
    return 0;
}

// ---------------------------------------------------------------------------

std::string dump_defaults() {
    json jm, jp, jt, jg, jc;
    to_json(jm, ModelConfig{});
    to_json(jp, PseudoLabelConfig{});
    to_json(jt, TrainConfig{});
    to_json(jg, GplcConfig{});
    to_json(jc, CorpusConfig{});
    std::string s;
    s += "Config section defaults:\n";
    s += "  model:  " + jm.dump() + "\n";
    s += "  pseudo: " + jp.dump() + "\n";
    s += "  train:  " + jt.dump() + "\n";
    s += "  gplc:   " + jg.dump() + "\n";
    s += "  corpus: " + jc.dump();
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hand-object contact sequences: synthesis, pseudo-labels, training, correction "
                 "and evaluation.\n" +
                 dump_defaults()};
    app.require_subcommand(1);
    app.set_version_flag("--version", CONTACTSEQ_VERSION);

    SynthArgs sy;
    CLI::App* synth = app.add_subcommand(
        "synth", "Render scripted scenes: --spec draws N tracks from one scenario file, "
                 "--corpus writes noisy/trusted/test splits from a corpus config.");
    synth->add_option("--spec", sy.spec, "scenario spec file (JSON)");
    synth->add_option("--corpus", sy.corpus, "corpus config file (JSON)");
    synth->add_option("--n", sy.n, "tracks to render in --spec mode")->capture_default_str();
    synth->add_option("--seed", sy.seed, "base seed; per-track seeds derive from it")
        ->capture_default_str();
    synth->add_option("--out", sy.out, "output directory");
    synth->add_option("--threads", sy.threads, "worker cap; outputs do not depend on it")
        ->capture_default_str();

    PseudoArgs ps;
    CLI::App* pseudo = app.add_subcommand(
        "pseudolabel", "Generate motion-based contact pseudo-labels for every track under --in.");
    pseudo->add_option("--config", ps.config, "pseudo-label config file (JSON); defaults above");
    pseudo->add_option("--in", ps.in, "track directory");
    pseudo->add_option("--out", ps.out, "output directory (labels/<id>.txt + pseudolabel.csv)");
    pseudo->add_option("--threads", ps.threads, "worker cap; outputs do not depend on it")
        ->capture_default_str();

    TrainArgs tr;
    CLI::App* train_cmd = app.add_subcommand(
        "train",
        "Train a contact classifier. Modes: supervised (trusted only), noisy_only, joint "
        "(noisy+trusted), plc (self-guided label correction), gplc (guided correction), "
        "pseudo_labeling (teacher on trusted relabels the noisy split). plc/gplc take step "
        "parameters from the gplc section, the other modes from the train section.");
    train_cmd->add_option("--config", tr.config, "experiment config file (JSON); flags override");
    train_cmd->add_option("--noisy", tr.noisy, "noisy split directory");
    train_cmd->add_option("--trusted", tr.trusted, "trusted split directory");
    train_cmd->add_option("--test", tr.test, "held-out split; adds test_metrics.csv");
    train_cmd->add_option("--labels", tr.labels, "label override directory for the noisy split");
    train_cmd->add_option("--mode", tr.mode, "training mode (default gplc)");
    train_cmd->add_option("--seed", tr.seed, "experiment seed")->capture_default_str();
    train_cmd->add_option("--out", tr.out, "output directory");
    train_cmd->add_option("--threads", tr.threads, "worker cap for data loading")
        ->capture_default_str();

    EvalArgs ev;
    CLI::App* eval_cmd = app.add_subcommand(
        "eval", "Score predictions against reference labels; writes one summary CSV row.");
    eval_cmd->add_option("--pred", ev.pred, "prediction directory (<id>.txt or <id>/labels.txt)");
    eval_cmd->add_option("--gt", ev.gt, "reference directory (tracks or label files)");
    eval_cmd->add_option("--out", ev.out, "report CSV path");
    eval_cmd->add_option("--name", ev.name, "method name for the CSV row")->capture_default_str();
    eval_cmd->add_option("--tol", ev.tol, "boundary tolerance, frames")->capture_default_str();
    eval_cmd->add_flag("--jsonl", ev.jsonl, "also write a per-track JSONL breakdown");

    GradArgs gr;
    CLI::App* grad = app.add_subcommand(
        "gradcheck",
        "Compare analytic gradients against central finite differences on a tiny model; "
        "exits 0 iff the worst relative error stays within --tol.");
    grad->add_option("--seeds", gr.seeds, "independent random trials")->capture_default_str();
    grad->add_option("--frames", gr.frames, "sequence length")->capture_default_str();
    grad->add_option("--eps", gr.eps, "finite-difference step")->capture_default_str();
    grad->add_option("--tol", gr.tol, "max allowed relative error")->capture_default_str();
    grad->add_option("--out", gr.out, "output directory (gradcheck.csv)");

    ReportArgs rp;
    CLI::App* report = app.add_subcommand(
        "report", "Assemble a multi-method metric table; --tracks adds the trivial "
                  "fixed_contact and iou_positive reference rows.");
    report->add_option("--gt", rp.gt, "reference directory");
    report->add_option("--pred", rp.preds, "NAME=DIR prediction source (repeatable)");
    report->add_option("--tracks", rp.tracks, "track directory for the reference predictors");
    report->add_option("--out", rp.out, "output directory (report.csv)");
    report->add_option("--tol", rp.tol, "boundary tolerance, frames")->capture_default_str();
    report->add_option("--threads", rp.threads, "worker cap; outputs do not depend on it")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        std::cerr << "error: args: " << one_line(e.what()) << "\n";
        return 2;
    }

    sy.seed_given = synth->count("--seed") > 0;
    tr.seed_given = train_cmd->count("--seed") > 0;

    try {
        if (*synth) return cmd_synth(sy);
        if (*pseudo) return cmd_pseudolabel(ps);
        if (*train_cmd) return cmd_train(tr);
        if (*eval_cmd) return cmd_eval(ev);
        if (*grad) return cmd_gradcheck(gr);
        if (*report) return cmd_report(rp);
    } catch (const ConfigError& e) {
        std::cerr << "error: config: " << one_line(e.what()) << "\n";
        return 2;
    } catch (const TrackIoError& e) {
        std::cerr << "error: io: " << one_line(e.what()) << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: runtime: " << one_line(e.what()) << "\n";
        return 1;
    }
    return 0;
}
