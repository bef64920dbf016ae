#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>

#include "trilstm/bench.hpp"
#include "trilstm/checkpoint.hpp"
#include "trilstm/dataset.hpp"
#include "trilstm/gradcheck.hpp"
#include "trilstm/graph.hpp"
#include "trilstm/metrics.hpp"
#include "trilstm/train.hpp"

namespace py = pybind11;
using namespace trilstm;

namespace {

TrainConfig config_from_kwargs(const py::kwargs& kwargs) {
    TrainConfig cfg;
    for (const auto& item : kwargs) {
        const std::string key = py::cast<std::string>(item.first);
        if (key == "epochs") cfg.epochs = py::cast<std::size_t>(item.second);
        else if (key == "minibatch") cfg.minibatch = py::cast<std::size_t>(item.second);
        else if (key == "dropout") cfg.dropout = py::cast<double>(item.second);
        else if (key == "lambda_" || key == "lambda") cfg.lambda = py::cast<double>(item.second);
        else if (key == "alpha") cfg.alpha = py::cast<double>(item.second);
        else if (key == "shuffle_order") cfg.shuffle_order = py::cast<bool>(item.second);
        else if (key == "shuffle_copies") cfg.shuffle_copies = py::cast<std::size_t>(item.second);
        else if (key == "seed") cfg.seed = py::cast<std::uint64_t>(item.second);
        else if (key == "eval_repeats") cfg.eval_repeats = py::cast<std::size_t>(item.second);
        else if (key == "embed_dim") cfg.embed_dim = py::cast<std::size_t>(item.second);
        else if (key == "hidden_dim") cfg.hidden_dim = py::cast<std::size_t>(item.second);
        else if (key == "mlp_hidden") cfg.mlp_hidden = py::cast<std::size_t>(item.second);
        else if (key == "baseline_hidden") cfg.baseline_hidden = py::cast<std::size_t>(item.second);
        else if (key == "include_final_loss") cfg.include_final_loss = py::cast<bool>(item.second);
        else if (key == "lr") cfg.opt.lr = py::cast<double>(item.second);
        else if (key == "optimizer")
            cfg.opt.kind = optimizer_kind_from_string(py::cast<std::string>(item.second));
        else if (key == "grad_clip_norm") cfg.opt.grad_clip_norm = py::cast<double>(item.second);
        else throw ConfigError("unknown train config key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

py::dict report_to_dict(const MetricsReport& r) {
    py::dict d;
    d["model"] = r.model;
    d["order_shuffled"] = r.order_shuffled;
    d["seed"] = r.seed;
    d["auc"] = r.auc;
    d["recall"] = r.recall;
    d["specificity"] = r.specificity;
    d["accuracy"] = r.accuracy;
    d["tp"] = r.tp;
    d["fn"] = r.fn;
    d["tn"] = r.tn;
    d["fp"] = r.fp;
    return d;
}

struct PyTrainedModel {
    Model model;
    TrainConfig config;
    NormStats stats;
    std::vector<EpochLoss> trace;
};

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "TRI-LSTM glaucoma biomarker relationship miner";

    py::register_exception<Error>(m, "TrilstmError");

    py::class_<Dataset>(m, "Dataset")
        .def("__len__", [](const Dataset& d) { return d.size(); })
        .def_property_readonly("labels",
                               [](const Dataset& d) {
                                   std::vector<int> out;
                                   for (const auto& r : d.records)
                                       out.push_back(r.label);
                                   return out;
                               })
        .def_property_readonly("patient_ids",
                               [](const Dataset& d) {
                                   std::vector<std::string> out;
                                   for (const auto& r : d.records)
                                       out.push_back(r.patient_id);
                                   return out;
                               })
        .def("value",
             [](const Dataset& d, std::size_t record, const std::string& code,
                const std::string& eye) {
                 if (record >= d.size())
                     throw BoundsError("record index out of range");
                 const auto idx = d.schema().index_of(code);
                 if (!idx)
                     throw ConfigError("unknown biomarker '" + code + "'");
                 const auto& r = d.records[record];
                 if (eye == "od") return r.od[*idx];
                 if (eye == "os") return r.os[*idx];
                 if (eye == "ie") return r.ie[*idx];
                 throw ConfigError("eye must be od, os or ie");
             },
             py::arg("record"), py::arg("code"), py::arg("eye") = "od")
        .def("to_csv", [](const Dataset& d) { return dataset_to_csv(d); });

    m.def("biomarker_codes", []() {
        std::vector<std::string> out;
        for (const auto& d : BiomarkerSchema::standard().descriptors())
            out.push_back(d.code);
        return out;
    });

    m.def(
        "generate_synthetic",
        [](std::size_t n_patients, double glaucoma_fraction, double noise_scale,
           std::uint64_t seed, double separability) {
            GeneratorConfig cfg;
            cfg.n_patients = n_patients;
            cfg.glaucoma_fraction = glaucoma_fraction;
            cfg.noise_scale = noise_scale;
            cfg.seed = seed;
            cfg.separability = separability;
            return generate_synthetic(cfg);
        },
        py::arg("n_patients") = 2000, py::arg("glaucoma_fraction") = 0.5,
        py::arg("noise_scale") = 1.0, py::arg("seed") = 42, py::arg("separability") = 1.0);

    m.def("save_csv", &save_csv, py::arg("dataset"), py::arg("path"));
    m.def("load_csv", &load_csv, py::arg("path"));
    m.def("split_75_25", &split_75_25, py::arg("dataset"), py::arg("seed"));

    py::class_<PyTrainedModel>(m, "TrainedModel")
        .def_property_readonly("kind",
                               [](const PyTrainedModel& t) { return to_string(t.model.kind); })
        .def_property_readonly("param_count",
                               [](const PyTrainedModel& t) { return t.model.param_count(); })
        .def_property_readonly("loss_trace",
                               [](const PyTrainedModel& t) {
                                   std::vector<double> out;
                                   for (const auto& e : t.trace)
                                       out.push_back(e.total);
                                   return out;
                               })
        .def("evaluate",
             [](const PyTrainedModel& t, const Dataset& raw_test) {
                 return report_to_dict(
                     evaluate(t.model, apply_normalizer(raw_test, t.stats), t.config));
             },
             py::arg("test"))
        .def("predict_proba",
             [](const PyTrainedModel& t, const Dataset& raw) {
                 const Dataset n = apply_normalizer(raw, t.stats);
                 const auto id = identity_permutation(n.schema().size());
                 std::vector<double> out;
                 for (const auto& rec : n.records)
                     out.push_back(positive_probability(t.model, rec, id));
                 return out;
             },
             py::arg("data"))
        .def("extract_graph",
             [](const PyTrainedModel& t, const Dataset& raw_test) {
                 if (t.model.kind != ModelKind::TriLstm)
                     throw ConfigError("graph extraction needs a tri-lstm model");
                 const GraphExtraction ex =
                     extract_graph(t.model.tri(), apply_normalizer(raw_test, t.stats),
                                   BiomarkerSchema::standard());
                 py::dict out;
                 auto emit = [&](const std::optional<DecisionGraph>& g) -> py::object {
                     if (!g)
                         return py::none();
                     py::dict side;
                     side["dot"] = export_dot(*g);
                     side["json"] = export_json(*g);
                     side["subordination_accuracy"] =
                         score_graph(*g, BiomarkerSchema::standard());
                     return side;
                 };
                 out["yes"] = emit(ex.yes_graph);
                 out["no"] = emit(ex.no_graph);
                 py::dict influences;
                 for (const auto& inf : ex.influences)
                     influences[py::str(inf.code)] = inf.mean_sensitivity;
                 out["influences"] = influences;
                 return out;
             },
             py::arg("test"))
        .def("save",
             [](const PyTrainedModel& t, const std::string& path) {
                 save_checkpoint(path, t.model, t.config, t.stats);
             },
             py::arg("path"));

    m.def(
        "train",
        [](const std::string& model, const Dataset& raw_train, const py::kwargs& kwargs) {
            const TrainConfig cfg = config_from_kwargs(kwargs);
            const NormStats stats = fit_normalizer(raw_train);
            const Dataset train_n = apply_normalizer(raw_train, stats);
            TrainResult r = train(model_kind_from_string(model), train_n, cfg);
            PyTrainedModel out;
            out.model = std::move(r.model);
            out.config = cfg;
            out.stats = stats;
            out.trace = std::move(r.trace);
            return out;
        },
        py::arg("model"), py::arg("train_data"),
        "Fit a normalizer on train_data, then train the given model kind. "
        "Keyword arguments mirror the CLI training flags (epochs, seed, "
        "shuffle_order, hidden_dim, ...).");

    m.def("load_checkpoint", [](const std::string& path) {
        Checkpoint ck = load_checkpoint(path);
        PyTrainedModel out;
        out.model = std::move(ck.model);
        out.config = ck.config;
        out.stats = ck.stats;
        return out;
    });

    m.def(
        "compute_metrics",
        [](const std::vector<double>& scores, const std::vector<int>& labels) {
            return report_to_dict(compute_metrics(scores, labels));
        },
        py::arg("scores"), py::arg("labels"));
    m.def("rank_auc", &rank_auc, py::arg("scores"), py::arg("labels"));

    m.def(
        "benchmark",
        [](const Dataset& raw, std::size_t seeds, std::size_t jobs, const py::kwargs& kwargs) {
            const TrainConfig cfg = config_from_kwargs(kwargs);
            const BenchResult r = benchmark_grid(raw, cfg, seeds, jobs);
            py::dict out;
            out["table"] = format_bench_table(r);
            out["json"] = bench_to_json(r);
            py::list rows;
            for (const auto& cell : r.cells) {
                py::dict row = report_to_dict(cell.mean);
                row["model"] = to_string(cell.model);
                row["order_shuffled"] = cell.order_shuffled;
                rows.append(row);
            }
            out["rows"] = rows;
            return out;
        },
        py::arg("data"), py::arg("seeds") = 5, py::arg("jobs") = 1);

    m.def(
        "gradcheck",
        [](std::uint64_t seed) {
            const GradCheckReport r = run_gradcheck(seed);
            py::dict out;
            out["all_passed"] = r.all_passed;
            out["seconds"] = r.seconds;
            py::list results;
            for (const auto& res : r.results) {
                py::dict d;
                d["name"] = res.name;
                d["passed"] = res.passed;
                d["max_rel_err"] = res.max_rel_err;
                d["worst_tensor"] = res.worst_tensor;
                results.append(d);
            }
            out["results"] = results;
            return out;
        },
        py::arg("seed") = 7);

#ifdef TRILSTM_VERSION
    m.attr("__version__") = TRILSTM_VERSION;
#else
    m.attr("__version__") = "dev";
#endif
}
