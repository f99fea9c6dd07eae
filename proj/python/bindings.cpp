// Python bindings for the orbf library.
#include "orbf/config.hpp"
#include "orbf/data.hpp"
#include "orbf/error.hpp"
#include "orbf/estimators.hpp"
#include "orbf/evaluation.hpp"
#include "orbf/featsel.hpp"
#include "orbf/log.hpp"
#include "orbf/pipeline.hpp"
#include "orbf/prototypes.hpp"
#include "orbf/rbfmap.hpp"
#include "orbf/rbfnet.hpp"
#include "orbf/version.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace orbf;

namespace {

std::string to_text(const py::handle& v) {
    if (py::isinstance<py::bool_>(v)) return v.cast<bool>() ? "true" : "false";
    if (py::isinstance<py::str>(v)) return v.cast<std::string>();
    if (py::isinstance<py::list>(v) || py::isinstance<py::tuple>(v)) {
        std::string out;
        for (auto item : v) {
            if (!out.empty()) out += ',';
            out += to_text(item);
        }
        return out;
    }
    return py::str(v).cast<std::string>();
}

void apply_kwargs(ExperimentConfig& cfg, const py::kwargs& kw) {
    // Python keywords cannot contain dots; "rbfnet__tau" means "rbfnet.tau".
    for (auto [k, v] : kw) {
        auto key = k.cast<std::string>();
        for (std::size_t p; (p = key.find("__")) != std::string::npos;) key.replace(p, 2, ".");
        set_config_value(cfg, key, to_text(v));
    }
}

py::dict config_dict(const ExperimentConfig& cfg) {
    std::ostringstream out;
    write_config(out, cfg);
    py::dict d;
    std::istringstream in(out.str());
    for (std::string line; std::getline(in, line);) {
        const auto eq = line.find(" = ");
        d[py::str(line.substr(0, eq))] = line.substr(eq + 3);
    }
    return d;
}

py::dict selection_dict(const FeatureSelection& s) {
    py::dict d;
    d["target"] = s.target_id;
    d["features"] = s.features;
    d["names"] = s.feature_names;
    d["r2_path"] = s.r2_path;
    d["vifs"] = s.vifs;
    return d;
}

py::object stats_dict(const std::optional<SummaryStats>& s) {
    if (!s) return py::none();
    py::dict d;
    d["targets"] = s->targets;
    d["count"] = s->count;
    d["mean"] = s->mean;
    d["std"] = s->std;
    d["min"] = s->min;
    d["q25"] = s->q25;
    d["median"] = s->q50;
    d["q75"] = s->q75;
    d["max"] = s->max;
    d["se"] = s->se;
    return d;
}

py::object test_dict(const std::optional<TestResult>& t) {
    if (!t) return py::none();
    py::dict d;
    d["statistic"] = t->statistic;
    d["p_value"] = t->p_value;
    d["df"] = t->df;
    return d;
}

py::dict report_dict(const EvaluationReport& r) {
    py::list cells, models, pairs, curve;
    for (const auto& c : r.cells) {
        py::dict d;
        d["model"] = c.model;
        d["target"] = c.target;
        d["horizon"] = c.horizon;
        d["count"] = c.count;
        d["mse"] = c.mse;
        d["nmse"] = c.nmse;
        d["accuracy"] = c.accuracy;
        cells.append(d);
    }
    for (const auto& m : r.models) {
        py::dict d;
        d["model"] = m.model;
        d["nmse"] = stats_dict(m.nmse);
        d["wald"] = test_dict(m.wald);
        d["accuracy"] = stats_dict(m.accuracy);
        models.append(d);
    }
    for (const auto& p : r.pairwise) {
        py::dict d;
        d["model_a"] = p.model_a;
        d["model_b"] = p.model_b;
        d["test"] = test_dict(p.result);
        pairs.append(d);
    }
    for (const auto& h : r.curve) {
        py::dict d;
        d["model"] = h.model;
        d["horizon"] = h.horizon;
        d["nmse"] = h.mean_nmse;
        curve.append(d);
    }
    py::dict d;
    d["cells"] = cells;
    d["models"] = models;
    d["pairwise"] = pairs;
    d["curve"] = curve;
    return d;
}

ReturnSeries make_returns(const Eigen::MatrixXd& values, std::vector<std::string> names) {
    if (static_cast<std::size_t>(values.cols()) != names.size())
        throw ShapeError("one instrument name per column is required");
    ReturnSeries s;
    s.values = values;
    s.instruments = std::move(names);
    s.timestamps = synthetic_calendar(static_cast<std::size_t>(values.rows()));
    return s;
}

ForecastRecord from_tuple(const py::tuple& t) {
    if (t.size() != 6) throw ShapeError("a record is (target, model, horizon, t, y_hat, y_realized)");
    return ForecastRecord{t[0].cast<std::string>(), t[1].cast<std::string>(), t[2].cast<std::size_t>(),
                          t[3].cast<std::int64_t>(), t[4].cast<double>(), t[5].cast<std::optional<double>>()};
}

py::tuple to_tuple(const ForecastRecord& r) {
    return py::make_tuple(r.target_id, r.model_id, r.horizon, r.t, r.y_hat, r.y_realized);
}

PricePanel synthesize(const ExperimentConfig& cfg) {
    switch (cfg.source) {
    case DataSource::Ar1: return synthesize_ar1_panel(cfg.synth.ar1());
    case DataSource::RegimeFlip: return synthesize_regime_flip(cfg.synth.regime_flip());
    case DataSource::JumpDiffusion: return synthesize_jump_diffusion(cfg.synth.jump_diffusion());
    default: throw ConfigError("data.source must be a synthetic kind");
    }
}

RbfNetConfig rbfnet_config(const py::kwargs& kw) {
    ExperimentConfig cfg;
    py::kwargs scoped;
    std::optional<std::uint64_t> seed;
    for (auto [k, v] : kw) {
        const auto key = k.cast<std::string>();
        if (key == "seed")
            seed = v.cast<std::uint64_t>();
        else
            scoped[py::str("rbfnet__" + key)] = v;
    }
    apply_kwargs(cfg, scoped);
    cfg.rbfnet.selection = cfg.selection;
    if (seed) cfg.rbfnet.seed = *seed;
    return cfg.rbfnet;
}

} // namespace

PYBIND11_MODULE(_orbf, m) {
    m.doc() = "Online RBF network forecasting";
    m.attr("__version__") = kVersion;

    // The module keeps these alive for the translator.
    static PyObject* base = py::exception<Error>(m, "OrbfError", PyExc_RuntimeError).ptr();
    static PyObject* config_error = py::exception<Error>(m, "ConfigError", base).ptr();
    static PyObject* data_error = py::exception<Error>(m, "DataError", base).ptr();
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            PyObject* type = base;
            if (e.category() == ErrorCategory::Config) type = config_error;
            if (e.category() == ErrorCategory::Data) type = data_error;
            PyErr_SetString(type, e.what());
        }
    });

    m.def("set_log_level", [](const std::string& level) {
        static const std::pair<const char*, log::Level> names[] = {
            {"debug", log::Level::Debug}, {"info", log::Level::Info}, {"warn", log::Level::Warn},
            {"error", log::Level::Error}, {"off", log::Level::Off}};
        for (const auto& [n, l] : names)
            if (level == n) return log::set_level(l);
        throw ConfigError("unknown log level '" + level + "'");
    }, py::arg("level"));

    py::class_<ExperimentConfig>(m, "Config")
        .def(py::init([](const py::kwargs& kw) {
            ExperimentConfig cfg;
            apply_kwargs(cfg, kw);
            return cfg;
        }))
        .def_static("load", &load_config, py::arg("path"))
        .def_static("parse", [](const std::string& text) {
            std::istringstream in(text);
            return parse_config(in);
        }, py::arg("text"))
        .def("set", [](ExperimentConfig& c, const std::string& key, const py::object& v) {
            set_config_value(c, key, to_text(v));
        }, py::arg("key"), py::arg("value"))
        .def("update", [](ExperimentConfig& c, const py::kwargs& kw) { apply_kwargs(c, kw); })
        .def("validate", &ExperimentConfig::validate)
        .def("to_dict", &config_dict)
        .def("__str__", [](const ExperimentConfig& c) {
            std::ostringstream out;
            write_config(out, c);
            return out.str();
        })
        .def("__repr__", [](const ExperimentConfig& c) {
            return "<orbf.Config source=" + config_dict(c)["data.source"].cast<std::string>() + ">";
        });

    py::class_<ExperimentResult>(m, "Result")
        .def_readonly("train_rows", &ExperimentResult::train_rows)
        .def_readonly("test_rows", &ExperimentResult::test_rows)
        .def_property_readonly("records", [](const ExperimentResult& r) {
            py::list out;
            for (const auto& rec : r.records) out.append(to_tuple(rec));
            return out;
        })
        .def_property_readonly("report", [](const ExperimentResult& r) { return report_dict(r.report); })
        .def_property_readonly("selections", [](const ExperimentResult& r) {
            py::list out;
            for (const auto& s : r.selections) out.append(selection_dict(s));
            return out;
        })
        .def_property_readonly("failures", [](const ExperimentResult& r) {
            py::list out;
            for (const auto& f : r.failures) out.append(py::make_tuple(f.target, f.model, f.horizon, f.message));
            return out;
        })
        .def("mean_nmse", [](const ExperimentResult& r) {
            py::dict d;
            for (const auto& s : r.report.models)
                if (s.nmse) d[py::str(s.model)] = s.nmse->mean;
            return d;
        })
        .def("write", [](const ExperimentResult& r, const ExperimentConfig& c, const std::filesystem::path& dir) {
            write_outputs(r, c, dir);
        }, py::arg("config"), py::arg("out_dir"));

    m.def("run_experiment", [](const ExperimentConfig& c) {
        py::gil_scoped_release release;
        return run_experiment(c);
    }, py::arg("config"));
    m.def("run_experiment", [](const ExperimentConfig& c, const Eigen::MatrixXd& returns,
                               std::vector<std::string> names) {
        auto series = make_returns(returns, std::move(names));
        py::gil_scoped_release release;
        return run_experiment(c, series);
    }, py::arg("config"), py::arg("returns"), py::arg("names"));

    m.def("load_returns", [](const ExperimentConfig& c) {
        auto s = load_returns(c);
        std::vector<std::string> dates;
        for (auto d : s.timestamps) dates.push_back(format_iso_date(d));
        return py::make_tuple(s.values, s.instruments, dates);
    }, py::arg("config"), "Returns (values, instrument names, ISO dates).");

    m.def("synthesize", [](const ExperimentConfig& c) {
        auto p = synthesize(c);
        std::vector<std::string> dates;
        for (auto d : p.timestamps) dates.push_back(format_iso_date(d));
        return py::make_tuple(p.prices, p.instruments, dates);
    }, py::arg("config"), "Synthetic prices (prices, instrument names, ISO dates) for the configured source.");

    m.def("evaluate", [](const std::vector<py::tuple>& records, std::vector<std::string> models,
                         const std::string& baseline) {
        std::vector<ForecastRecord> recs;
        recs.reserve(records.size());
        for (const auto& t : records) recs.push_back(from_tuple(t));
        return report_dict(evaluate(recs, models, baseline));
    }, py::arg("records"), py::arg("models") = std::vector<std::string>{}, py::arg("baseline") = "rw");

    m.def("sign", &sign, py::arg("x"));
    m.def("wald_test", [](const std::vector<double>& s, double null_value) { return test_dict(wald_test(s, null_value)); },
          py::arg("samples"), py::arg("null_value") = 1.0);
    m.def("two_sample_t_test", [](const std::vector<double>& a, const std::vector<double>& b, bool pooled) {
        return test_dict(two_sample_t_test(a, b, pooled ? TTestVariant::Pooled : TTestVariant::Welch));
    }, py::arg("a"), py::arg("b"), py::arg("pooled") = false);

    m.def("vif", &vif, py::arg("X"));
    m.def("select_features", [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::size_t max_features,
                                double min_r2_gain, double vif_threshold) {
        return selection_dict(select_features(X, y, {max_features, min_r2_gain, vif_threshold}));
    }, py::arg("X"), py::arg("y"), py::arg("max_features") = 5, py::arg("min_r2_gain") = 0.005,
       py::arg("vif_threshold") = 5.0);

    m.def("kmeans", [](const Eigen::MatrixXd& X, std::size_t k, std::uint64_t seed, int max_iter, double tol) {
        auto r = kmeans_fit(X, k, seed, max_iter, tol);
        return py::make_tuple(r.centers, r.assignments, r.inertia_history);
    }, py::arg("X"), py::arg("k"), py::arg("seed") = 0, py::arg("max_iter") = 300, py::arg("tol") = 1e-8,
       "Returns (centers, assignments, inertia history).");

    m.def("rbf_activation", [](const Eigen::VectorXd& x, const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma) {
        Prototype p;
        p.mean = mu;
        p.scatter = sigma;
        p.covariance = sigma;
        p.weight = 1.0;
        p.refactor(0.0);
        return rbf_activation(x, p);
    }, py::arg("x"), py::arg("mean"), py::arg("covariance"));

    py::class_<EwrlsState>(m, "Ewrls")
        .def(py::init<std::size_t, double, double>(), py::arg("dim"), py::arg("delta") = 1.0, py::arg("tau") = 0.99)
        .def("predict", &EwrlsState::predict, py::arg("phi"))
        .def("step", &EwrlsState::step, py::arg("phi"), py::arg("y"), "Returns the prior prediction, then updates.")
        .def_property_readonly("theta", &EwrlsState::theta)
        .def_property_readonly("inv_gram", &EwrlsState::inv_gram)
        .def_property_readonly("tau", &EwrlsState::tau)
        .def_property_readonly("n_updates", &EwrlsState::n_updates);

    py::class_<RbfNetModel>(m, "RbfNet")
        .def_static("fit", [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::size_t horizon,
                              const py::kwargs& kw) {
            return RbfNetModel::fit_initial(rbfnet_config(kw), X, y, horizon);
        }, py::arg("X"), py::arg("y"), py::arg("horizon") = 1,
           "Selects features, fits prototypes and streams the rows through the head. "
           "Keywords are rbfnet config keys (hidden_units, tau, delta, seed, ...).")
        .def_static("from_experiment", [](const ExperimentConfig& c, const std::string& target, std::size_t horizon) {
            return fit_rbfnet(c, load_returns(c), target, horizon);
        }, py::arg("config"), py::arg("target"), py::arg("horizon"),
           "The rbfnet cell a run would fit for (target, horizon), before the test segment.")
        .def("predict", [](RbfNetModel& mdl, std::int64_t t, const Eigen::VectorXd& x) { return mdl.predict(t, x).y_hat; },
             py::arg("t"), py::arg("candidates"))
        .def("resolve", [](RbfNetModel& mdl, std::int64_t t, double y) { mdl.resolve(t, y); }, py::arg("t"), py::arg("y"))
        .def("discard", &RbfNetModel::discard, py::arg("t"))
        .def("peek", &RbfNetModel::peek_rows, py::arg("candidates"))
        .def_property_readonly("horizon", &RbfNetModel::horizon)
        .def_property_readonly("pending", [](const RbfNetModel& mdl) { return mdl.pending().size(); })
        .def_property_readonly("selection", [](const RbfNetModel& mdl) { return selection_dict(mdl.selection()); })
        .def_property_readonly("hidden_units", [](const RbfNetModel& mdl) { return mdl.prototypes().k(); })
        .def_property_readonly("centers", [](const RbfNetModel& mdl) {
            const auto& ps = mdl.prototypes().prototypes;
            Eigen::MatrixXd c(static_cast<Eigen::Index>(ps.size()), static_cast<Eigen::Index>(mdl.prototypes().dim()));
            for (std::size_t j = 0; j < ps.size(); ++j) c.row(static_cast<Eigen::Index>(j)) = ps[j].mean.transpose();
            return c;
        })
        .def_property_readonly("weights", [](const RbfNetModel& mdl) { return mdl.head().theta(); });
}
