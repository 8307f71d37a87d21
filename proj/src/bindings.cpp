// Python surface for the pipeline: track IO, synthesis, pseudo-labels,
// features, metrics, and the trainable model. Label sequences cross the
// boundary as plain int lists (0 no-contact, 1 contact, -1 unlabeled);
// features as numpy arrays shaped (11, T).

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <utility>
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

namespace py = pybind11;
using nlohmann::json;
using namespace contactseq;

namespace {

LabelSeq seq_of(const std::vector<int>& v) {
    LabelSeq s;
    s.states.reserve(v.size());
    for (int x : v) {
        if (x != -1 && x != 0 && x != 1)
            throw ConfigError("label values must be -1, 0 or 1");
        s.states.push_back(Label(x));
    }
    return s;
}

std::vector<int> ints_of(const LabelSeq& s) {
    std::vector<int> v;
    v.reserve(s.size());
    for (Label l : s.states) v.push_back(int(l));
    return v;
}

std::vector<LabelSeq> seqs_of(const std::vector<std::vector<int>>& vs) {
    std::vector<LabelSeq> out;
    out.reserve(vs.size());
    for (const auto& v : vs) out.push_back(seq_of(v));
    return out;
}

template <typename T>
T config_from(const std::string& text) {
    T cfg;
    if (!text.empty()) from_json(json::parse(text), cfg);
    cfg.validate();
    return cfg;
}

// (features, labels) pairs as they arrive from Python.
using PyExample = std::pair<Eigen::MatrixXd, std::vector<int>>;

std::vector<SeqExample> examples_of(const std::vector<PyExample>& pairs, const char* prefix) {
    std::vector<SeqExample> out;
    out.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        SeqExample e;
        e.id = std::string(prefix) + "_" + std::to_string(i);
        e.features = pairs[i].first;
        e.labels = seq_of(pairs[i].second);
        if (std::size_t(e.features.cols()) != e.labels.size())
            throw ConfigError("features and labels disagree on length for " + e.id);
        out.push_back(std::move(e));
    }
    return out;
}

py::dict summary_dict(const EvalSummary& s) {
    py::dict d;
    d["frame_acc"] = s.frame_acc;
    d["boundary_precision"] = s.boundary_precision;
    d["boundary_recall"] = s.boundary_recall;
    d["boundary_f1"] = s.boundary_f1;
    d["peripheral_acc"] = s.peripheral_acc;
    d["edit_score"] = s.edit;
    d["correct_track_ratio"] = s.correct_track_ratio;
    d["tracks"] = s.per_track.size();
    py::list per_track;
    for (const TrackMetrics& t : s.per_track) {
        py::dict r;
        r["id"] = t.id;
        r["frame_acc"] = t.frame_acc;
        r["boundary_f1"] = t.boundary.f1;
        r["edit_score"] = t.edit;
        r["correct"] = t.correct;
        per_track.append(r);
    }
    d["per_track"] = per_track;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "hand-object contact sequences: synthesis, pseudo-labels, training, metrics";
    m.attr("__version__") = CONTACTSEQ_VERSION;
    m.attr("FEATURE_DIM") = kFeatureDim;

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<TrackIoError>(m, "TrackIoError", PyExc_IOError);

    py::class_<Track, std::shared_ptr<Track>>(m, "Track")
        .def_readonly("id", &Track::id)
        .def_readonly("width", &Track::width)
        .def_readonly("height", &Track::height)
        .def_readonly("fps", &Track::fps)
        .def("__len__", &Track::size)
        .def("checksum", &track_checksum)
        .def("__repr__", [](const Track& t) {
            return "Track(id='" + t.id + "', frames=" + std::to_string(t.size()) + ", " +
                   std::to_string(t.width) + "x" + std::to_string(t.height) + ")";
        });

    m.def(
        "load_track", [](const std::string& dir) { return load_track(dir); }, py::arg("dir"),
        "Load one track directory (manifest, masks, boxes, flow).");
    m.def(
        "save_track",
        [](const Track& t, const std::string& dir, bool overwrite) {
            save_track(t, dir, overwrite);
        },
        py::arg("track"), py::arg("dir"), py::arg("overwrite") = false);
    m.def(
        "load_labels", [](const std::string& file) { return ints_of(load_labels(file)); },
        py::arg("file"));
    m.def(
        "save_labels",
        [](const std::vector<int>& labels, const std::string& file) {
            save_labels(seq_of(labels), file);
        },
        py::arg("labels"), py::arg("file"));

    m.def(
        "generate_track",
        [](const std::string& spec_path, std::uint64_t seed, const std::string& id) {
            SynthResult r = generate_track(load_scenario(spec_path), seed, id);
            return py::make_tuple(std::make_shared<Track>(std::move(r.track)), ints_of(r.truth));
        },
        py::arg("spec_path"), py::arg("seed") = 0, py::arg("id") = std::string("scene"),
        "Render a scenario spec file into a (track, truth) pair.");
    m.def(
        "generate_corpus",
        [](const std::string& config, const std::string& out_dir) {
            CorpusConfig cfg = config_from<CorpusConfig>(config);
            CorpusStats st = generate_corpus(cfg, out_dir);
            py::dict d;
            d["tracks"] = st.tracks;
            d["frames"] = st.frames;
            d["labeled"] = st.labeled;
            d["label_hits"] = st.label_hits;
            d["coverage"] = st.coverage();
            d["label_accuracy"] = st.label_accuracy();
            return d;
        },
        py::arg("config") = std::string(), py::arg("out_dir"),
        "Write noisy/trusted/test splits; config is a CorpusConfig JSON string.");

    m.def(
        "extract_features",
        [](const Track& t, const std::string& config) {
            return extract_features(t, config_from<PseudoLabelConfig>(config));
        },
        py::arg("track"), py::arg("config") = std::string(),
        "Per-frame motion/geometry descriptors, shaped (11, T).");
    m.def(
        "pseudolabels",
        [](const Track& t, const std::string& config) {
            PseudoLabelResult r = generate_pseudolabels(t, config_from<PseudoLabelConfig>(config));
            py::dict d;
            d["labels"] = ints_of(r.labels);
            d["rule_labels"] = ints_of(r.rule_labels);
            d["cancelled"] = r.cancelled;
            d["frame_errors"] = r.frame_errors;
            d["extended"] = r.extended;
            d["coverage"] = r.coverage();
            return d;
        },
        py::arg("track"), py::arg("config") = std::string(),
        "Motion-rule labels plus trajectory extension for one track.");

    m.def(
        "boundary_score",
        [](const std::vector<int>& pred, const std::vector<int>& gt, int tol) {
            BoundaryScore b = boundary_score(seq_of(pred), seq_of(gt), tol);
            return py::make_tuple(b.precision, b.recall, b.f1);
        },
        py::arg("pred"), py::arg("gt"), py::arg("tol") = 6,
        "(precision, recall, f1) of boundary detection at the given tolerance.");
    m.def(
        "edit_score",
        [](const std::vector<int>& pred, const std::vector<int>& gt) {
            return edit_score(seq_of(pred), seq_of(gt));
        },
        py::arg("pred"), py::arg("gt"));
    m.def(
        "frame_accuracy",
        [](const std::vector<int>& pred, const std::vector<int>& gt) {
            return frame_accuracy(seq_of(pred), seq_of(gt));
        },
        py::arg("pred"), py::arg("gt"),
        "Mean per-class recall over classes present in gt; None when gt is unlabeled.");
    m.def(
        "labeled_accuracy",
        [](const std::vector<int>& labels, const std::vector<int>& gt) {
            return labeled_accuracy(seq_of(labels), seq_of(gt));
        },
        py::arg("labels"), py::arg("gt"));
    m.def(
        "evaluate",
        [](const std::vector<std::vector<int>>& preds, const std::vector<std::vector<int>>& gts,
           int tol) { return summary_dict(evaluate(seqs_of(preds), seqs_of(gts), {}, tol)); },
        py::arg("preds"), py::arg("gts"), py::arg("tol") = 6,
        "Per-track metrics plus unweighted means, as a dict.");

    py::class_<Model>(m, "Model")
        .def_static(
            "load", [](const std::string& path) { return Model::load(path); }, py::arg("path"))
        .def(
            "save", [](const Model& mo, const std::string& path) { mo.save(path); },
            py::arg("path"))
        .def_property_readonly("num_params", &Model::num_params)
        .def(
            "predict",
            [](const Model& mo, const Eigen::MatrixXd& x) { return ints_of(mo.predict(x)); },
            py::arg("features"))
        .def("predict_probs", &Model::predict_probs, py::arg("features"));

    m.def(
        "train",
        [](const std::vector<PyExample>& train_set, const std::vector<PyExample>& val_set,
           const std::string& train_config, const std::string& model_config) {
            TrainConfig tc = config_from<TrainConfig>(train_config);
            ModelConfig mc = config_from<ModelConfig>(model_config);
            TrainResult r =
                train(mc, examples_of(train_set, "train"), examples_of(val_set, "val"), tc);
            py::list curve;
            for (const CurvePoint& p : r.curve) {
                py::dict c;
                c["iter"] = p.iter;
                c["loss"] = p.loss;
                c["val_acc"] = p.val_acc;
                curve.append(c);
            }
            py::dict d;
            d["model"] = py::cast(std::move(r.model));
            d["curve"] = curve;
            d["best_val"] = r.best_val;
            d["best_iter"] = r.best_iter;
            return d;
        },
        py::arg("train_set"), py::arg("val_set") = std::vector<PyExample>{},
        py::arg("train_config") = std::string(), py::arg("model_config") = std::string(),
        "Train on (features, labels) pairs; configs are JSON strings (defaults when empty).");

    m.def(
        "run_gplc",
        [](const std::vector<PyExample>& noisy, const std::vector<PyExample>& trusted,
           const std::string& gplc_config, const std::string& model_config,
           const std::optional<std::vector<std::vector<int>>>& truth) {
            GplcConfig gc = config_from<GplcConfig>(gplc_config);
            ModelConfig mc = config_from<ModelConfig>(model_config);
            std::vector<LabelSeq> truth_seqs;
            const std::vector<LabelSeq>* tp = nullptr;
            if (truth) {
                truth_seqs = seqs_of(*truth);
                tp = &truth_seqs;
            }
            GplcResult r =
                run_gplc(mc, examples_of(noisy, "noisy"), examples_of(trusted, "trusted"), gc, tp);
            py::list rounds;
            for (const GplcRoundStats& st : r.rounds) {
                py::dict c;
                c["round"] = st.round;
                c["delta"] = st.delta;
                c["flips"] = st.flips;
                c["written"] = st.written;
                c["skipped_unlabeled"] = st.skipped_unlabeled;
                c["labeled"] = st.labeled;
                c["label_acc"] = st.label_acc;
                c["val_acc"] = st.val_acc;
                rounds.append(c);
            }
            py::list corrected;
            for (const LabelSeq& s : r.corrected) corrected.append(ints_of(s));
            py::dict d;
            d["model"] = py::cast(std::move(r.f));
            d["rounds"] = rounds;
            d["corrected"] = corrected;
            d["final_delta"] = r.final_delta;
            return d;
        },
        py::arg("noisy"), py::arg("trusted"), py::arg("gplc_config") = std::string(),
        py::arg("model_config") = std::string(), py::arg("truth") = py::none(),
        "Progressive label correction over (features, labels) pairs.");
}
