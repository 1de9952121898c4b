// Experiment command line: every operation of the library is exposed as a
// subcommand that reads a flat key=value config (flags override file values),
// echoes the resolved config next to its outputs, and writes CSV/JSON
// artifacts that reproduce byte-identically under the same seed and thread
// count.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "fia/attention.hpp"
#include "fia/corpus.hpp"
#include "fia/estimators.hpp"
#include "fia/gradcheck.hpp"
#include "fia/kernels.hpp"
#include "fia/model.hpp"
#include "fia/serialize.hpp"

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;
using namespace fia;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;

struct Settings {
    std::string subcommand;
    // key -> resolved value; defaults < config file < explicit flags.
    std::map<std::string, std::string> values;

    const std::string& str(const std::string& key) const { return values.at(key); }
    double num(const std::string& key) const { return std::stod(values.at(key)); }
    long integer(const std::string& key) const { return std::stol(values.at(key)); }
    std::uint64_t u64(const std::string& key) const { return std::stoull(values.at(key)); }
    bool flag(const std::string& key) const { return values.at(key) == "1" || values.at(key) == "true"; }

    std::vector<double> num_list(const std::string& key) const {
        std::vector<double> out;
        std::string item;
        std::stringstream ss(values.at(key));
        while (std::getline(ss, item, ','))
            if (!item.empty()) out.push_back(std::stod(item));
        return out;
    }
    std::vector<long> int_list(const std::string& key) const {
        std::vector<long> out;
        for (double v : num_list(key)) out.push_back(static_cast<long>(v));
        return out;
    }
};

struct OptionSpec {
    std::string key;
    std::string def;
    std::string help;
};

// Shared by every subcommand.
const std::vector<OptionSpec> kGlobalSpecs = {
    {"seed", "1", "global RNG seed"},
    {"threads", "1", "worker threads (1 = fully reproducible ordering)"},
    {"out", "", "output directory (default $FIA_OUTPUT_DIR or ./fia_out)"},
};

class SubcommandParser {
  public:
    SubcommandParser(CLI::App& root, const std::string& name, const std::string& help,
                     std::vector<OptionSpec> specs)
        : name_(name), specs_(std::move(specs)) {
        for (const auto& g : kGlobalSpecs) specs_.push_back(g);
        app_ = root.add_subcommand(name, help);
        app_->add_option("--config", config_path_, "flat key=value config file");
        for (const auto& s : specs_)
            flag_values_[s.key] = s.def,
            app_->add_option("--" + s.key, flag_values_[s.key], s.help);
    }

    CLI::App* app() { return app_; }
    bool selected() const { return app_->parsed(); }

    Settings resolve() const {
        Settings out;
        out.subcommand = name_;
        std::map<std::string, std::string> from_file;
        if (!config_path_.empty()) {
            std::ifstream in(config_path_);
            if (!in) throw CLI::ValidationError("--config", "cannot read " + config_path_);
            std::string line;
            while (std::getline(in, line)) {
                if (line.empty() || line[0] == '#') continue;
                const auto eq = line.find('=');
                if (eq == std::string::npos)
                    throw CLI::ValidationError("--config", "bad line: " + line);
                from_file[line.substr(0, eq)] = line.substr(eq + 1);
            }
            if (from_file.count("subcommand")) {
                if (from_file["subcommand"] != name_)
                    throw CLI::ValidationError(
                        "--config", "config is for subcommand " + from_file["subcommand"]);
                from_file.erase("subcommand");
            }
            for (const auto& [k, v] : from_file) {
                (void)v;
                bool known = false;
                for (const auto& s : specs_) known = known || s.key == k;
                if (!known)
                    throw CLI::ValidationError("--config", "unknown key: " + k);
            }
        }
        for (const auto& s : specs_) {
            if (app_->count("--" + s.key) > 0)
                out.values[s.key] = flag_values_.at(s.key);
            else if (from_file.count(s.key))
                out.values[s.key] = from_file[s.key];
            else
                out.values[s.key] = s.def;
        }
        return out;
    }

  private:
    std::string name_;
    std::vector<OptionSpec> specs_;
    CLI::App* app_ = nullptr;
    std::string config_path_;
    std::map<std::string, std::string> flag_values_;
};

fs::path prepare_output_dir(Settings& settings) {
    std::string dir = settings.str("out");
    if (dir.empty()) {
        const char* env = std::getenv("FIA_OUTPUT_DIR");
        dir = env ? env : "fia_out";
        settings.values["out"] = dir;
    }
    fs::create_directories(dir);
    return fs::path(dir);
}

void write_config_echo(const fs::path& dir, const Settings& settings) {
    std::string text = "subcommand=" + settings.subcommand + "\n";
    for (const auto& [k, v] : settings.values) text += k + "=" + v + "\n";
    write_text_file((dir / "config_echo.txt").string(), text);
}

void write_json(const fs::path& path, const json& j) {
    write_text_file(path.string(), j.dump(2) + "\n");
}

// ---------------------------------------------------------------- gradcheck

int run_gradcheck(Settings s) {
    const fs::path dir = prepare_output_dir(s);
    write_config_echo(dir, s);
    const std::size_t n = static_cast<std::size_t>(s.integer("n"));
    const std::size_t d = static_cast<std::size_t>(s.integer("dims"));
    const std::size_t dv = static_cast<std::size_t>(s.integer("dv"));
    const long seeds = s.integer("seeds");
    const double tol = s.num("tol");

    Rng root(s.u64("seed"));
    double overall = 0.0;
    json rows = json::array();
    std::vector<std::vector<double>> csv_rows;
    for (int l : {2, 4, 6}) {
        const PhiKernel kern = PhiKernel::make(l);
        for (int per_dim = 0; per_dim < 2; ++per_dim) {
            for (int causal = 0; causal < 2; ++causal) {
                for (long seed_i = 0; seed_i < seeds; ++seed_i) {
                    Rng rng = root.substream(
                        static_cast<std::uint64_t>(l * 1000 + per_dim * 100 + causal * 10) ^
                        (seed_i * 7919));
                    Tensor q({n, d}), k({n, d}), v({n, dv}), proj({n, dv});
                    for (auto* t : {&q, &k}) // |q - k| < pi/R keeps pairs off sinc zeros
                        for (std::size_t i = 0; i < t->size(); ++i)
                            (*t)[i] = rng.uniform(-1.0, 1.0);
                    for (std::size_t i = 0; i < v.size(); ++i) v[i] = rng.uniform(-1.0, 1.0);
                    for (std::size_t i = 0; i < proj.size(); ++i)
                        proj[i] = rng.uniform(-1.0, 1.0);

                    FourierAttentionParams params;
                    params.options.kernel = kern;
                    params.options.mask = causal ? MaskMode::causal : MaskMode::none;
                    if (per_dim) {
                        std::vector<double> rv(d);
                        for (double& x : rv) x = rng.uniform(0.5, 1.3);
                        params.r = Bandwidth::vector(rv);
                    } else {
                        params.r = Bandwidth::scalar(rng.uniform(0.5, 1.3));
                    }

                    const auto saved = fourier_attention(q, k, v, params);
                    const auto grads = fourier_attention_backward(proj, q, k, v, params, saved);

                    const std::size_t nr = params.r.values.size();
                    Tensor flat({2 * n * d + n * dv + nr}), analytic({2 * n * d + n * dv + nr});
                    std::size_t off = 0;
                    auto pack = [&](const Tensor& val, const Tensor& grad) {
                        for (std::size_t i = 0; i < val.size(); ++i) {
                            flat[off + i] = val[i];
                            analytic[off + i] = grad[i];
                        }
                        off += val.size();
                    };
                    pack(q, grads.dq);
                    pack(k, grads.dk);
                    pack(v, grads.dv);
                    for (std::size_t i = 0; i < nr; ++i) {
                        flat[off + i] = params.r.values[i];
                        analytic[off + i] = grads.dr[i];
                    }
                    const auto f = [&](const Tensor& x) {
                        Tensor qq = q, kk = k, vv = v;
                        std::size_t o = 0;
                        for (std::size_t i = 0; i < qq.size(); ++i) qq[i] = x[o + i];
                        o += qq.size();
                        for (std::size_t i = 0; i < kk.size(); ++i) kk[i] = x[o + i];
                        o += kk.size();
                        for (std::size_t i = 0; i < vv.size(); ++i) vv[i] = x[o + i];
                        o += vv.size();
                        FourierAttentionParams p = params;
                        for (std::size_t i = 0; i < nr; ++i) p.r.values[i] = x[o + i];
                        const Tensor outp = fourier_attention(qq, kk, vv, p).output;
                        double acc = 0.0;
                        for (std::size_t i = 0; i < outp.size(); ++i) acc += outp[i] * proj[i];
                        return acc;
                    };
                    const double rel = grad_check(f, flat, analytic, 1e-4).max_rel_err;
                    overall = std::max(overall, rel);
                    rows.push_back({{"phi_exponent", l},
                                    {"vector_r", per_dim == 1},
                                    {"causal", causal == 1},
                                    {"seed_index", seed_i},
                                    {"max_rel_err", rel}});
                    csv_rows.push_back({static_cast<double>(l), static_cast<double>(per_dim),
                                        static_cast<double>(causal),
                                        static_cast<double>(seed_i), rel});
                }
            }
        }
    }
    json summary;
    summary["max_rel_err"] = overall;
    summary["tolerance"] = tol;
    summary["passed"] = overall <= tol;
    summary["cases"] = rows;
    write_json(dir / "gradcheck.json", summary);
    write_csv((dir / "gradcheck.csv").string(),
              {"phi_exponent", "vector_r", "causal", "seed_index", "max_rel_err"}, csv_rows);
    std::printf("gradcheck: max_rel_err %.3e (tolerance %.1e)\n", overall, tol);
    return overall <= tol ? kExitOk : kExitCheckFailed;
}

// -------------------------------------------------------------- equivalence

int run_equivalence(Settings s) {
    const fs::path dir = prepare_output_dir(s);
    write_config_echo(dir, s);
    const long instances = s.integer("n");
    const std::size_t max_n = static_cast<std::size_t>(s.integer("max-n"));
    const std::size_t max_d = static_cast<std::size_t>(s.integer("max-d"));
    const double tol = s.num("tol");

    Rng root(s.u64("seed"));
    double worst = 0.0;
    std::vector<std::vector<double>> csv_rows;
    for (long i = 0; i < instances; ++i) {
        Rng rng = root.substream(static_cast<std::uint64_t>(i));
        const std::size_t n = 1 + rng.below(max_n), d = 1 + rng.below(max_d);
        Tensor keys({n, d});
        for (std::size_t r = 0; r < n; ++r) {
            double norm = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                keys.at(r, c) = rng.normal();
                norm += keys.at(r, c) * keys.at(r, c);
            }
            norm = std::max(std::sqrt(norm), 1e-12);
            for (std::size_t c = 0; c < d; ++c) keys.at(r, c) /= norm;
        }
        Tensor values({n, 3});
        for (std::size_t c = 0; c < values.size(); ++c) values[c] = rng.uniform(-2.0, 2.0);
        Tensor queries({4, d});
        for (std::size_t c = 0; c < queries.size(); ++c) queries[c] = rng.normal();
        const double gap = softmax_equivalence_check(keys, values, queries);
        worst = std::max(worst, gap);
        csv_rows.push_back({static_cast<double>(i), static_cast<double>(n),
                            static_cast<double>(d), gap});
    }
    json summary;
    summary["instances"] = instances;
    summary["max_abs_gap"] = worst;
    summary["tolerance"] = tol;
    summary["passed"] = worst <= tol;
    write_json(dir / "equivalence.json", summary);
    write_csv((dir / "equivalence.csv").string(), {"instance", "N", "D", "max_abs_gap"},
              csv_rows);
    std::printf("equivalence: max gap %.3e over %ld instances (tolerance %.1e)\n", worst,
                instances, tol);
    return worst <= tol ? kExitOk : kExitCheckFailed;
}

// ------------------------------------------------------------------- rates

DensityModel density_from_name(const std::string& family, std::size_t dim) {
    if (family == "gaussian") return DensityModel::gaussian(dim, 0.0, 1.0);
    if (family == "cauchy") return DensityModel::cauchy(dim, 0.0, 1.0);
    if (family == "laplace") return DensityModel::laplace(dim, 0.0, 1.0);
    if (family == "gaussian-mixture")
        return DensityModel::gaussian_mixture(dim, -1.5, 1.5, 0.8, 0.5);
    throw CLI::ValidationError("--family", "unknown density family " + family);
}

int run_rate(Settings s, RateKind kind) {
    const fs::path dir = prepare_output_dir(s);
    write_config_echo(dir, s);

    RateConfig cfg;
    cfg.kind = kind;
    cfg.estimator = s.str("estimator") == "gaussian" ? RateEstimator::gaussian
                                                     : RateEstimator::fourier;
    cfg.dim = static_cast<std::size_t>(s.integer("dim"));
    cfg.phi_exponent = static_cast<int>(s.integer("phi"));
    cfg.n_ladder.clear();
    for (long n : s.int_list("n-ladder")) cfg.n_ladder.push_back(static_cast<std::size_t>(n));
    cfg.reps = static_cast<int>(s.integer("reps"));
    cfg.r_constant = s.num("r-const");
    cfg.gaussian_sigma = s.num("gaussian-sigma");
    cfg.seed = s.u64("seed");
    cfg.threads = static_cast<int>(s.integer("threads"));
    cfg.key_density = density_from_name(s.str("family"), cfg.dim);
    if (cfg.dim == 1)
        cfg.grid = Grid::line(s.num("grid-lo"), s.num("grid-hi"),
                              static_cast<std::size_t>(s.integer("grid-points")));
    else
        cfg.grid = Grid::plane(s.num("grid-lo"), s.num("grid-hi"),
                               static_cast<std::size_t>(s.integer("grid-points")));
    cfg.true_f = s.str("true-f");
    cfg.noise_sigma = s.num("noise-sigma");
    cfg.n_test_points = static_cast<std::size_t>(s.integer("test-points"));

    const RateTable table = rate_experiment(cfg);
    const std::string stem = kind == RateKind::density_mise ? "density_rate" : "regression_rate";
    write_rate_csv((dir / (stem + ".csv")).string(), table);

    bool decreasing = true;
    for (std::size_t i = 1; i < table.rows.size(); ++i)
        decreasing = decreasing && table.rows[i].error_mean < table.rows[i - 1].error_mean;

    json summary;
    summary["kind"] = stem;
    summary["final_slope"] = table.final_slope;
    summary["strictly_decreasing"] = decreasing;
    json jrows = json::array();
    for (const auto& r : table.rows)
        jrows.push_back({{"N", r.n},
                         {"R", r.r},
                         {"error_mean", r.error_mean},
                         {"error_stderr", r.error_stderr},
                         {"slope_so_far", r.slope_so_far}});
    summary["rows"] = jrows;

    bool ok = true;
    if (!s.str("slope-max").empty()) {
        const double cap = s.num("slope-max");
        summary["slope_max"] = cap;
        ok = ok && table.final_slope <= cap;
    }
    if (s.flag("check-decreasing")) ok = ok && decreasing;
    summary["passed"] = ok;
    write_json(dir / (stem + ".json"), summary);
    std::printf("%s: slope %.4f, %s\n", stem.c_str(), table.final_slope,
                decreasing ? "strictly decreasing" : "not monotone");
    return ok ? kExitOk : kExitCheckFailed;
}

// --------------------------------------------------------------- bandlimit

int run_bandlimit(Settings s) {
    const fs::path dir = prepare_output_dir(s);
    write_config_echo(dir, s);
    const double tol = s.num("tol");
    const double kink_margin = s.num("kink-margin");
    const long points = s.integer("t-points");

    double worst = 0.0;
    std::vector<std::vector<double>> rows;
    for (double r : s.num_list("r-list")) {
        for (long l : s.int_list("l-list")) {
            for (long i = 0; i < points; ++i) {
                const double t = -2.0 * r + 4.0 * r * static_cast<double>(i) /
                                                static_cast<double>(points - 1);
                const double numeric = kernel_fourier_transform_check(static_cast<int>(l), r, t);
                const double closed = band_limit_closed_form(static_cast<int>(l), r, t);
                const double err = std::abs(numeric - closed);
                // Distance to the transform's kink/discontinuity set.
                double kink_dist;
                if (l == 1)
                    kink_dist = std::abs(std::abs(t) - r);
                else
                    kink_dist = std::min(std::abs(t), std::abs(std::abs(t) - 2.0 * r));
                const bool counted = kink_dist >= kink_margin;
                if (counted) worst = std::max(worst, err);
                rows.push_back({static_cast<double>(l), r, t, numeric, closed, err,
                                counted ? 1.0 : 0.0});
            }
        }
    }
    write_csv((dir / "bandlimit.csv").string(),
              {"phi_exponent", "R", "t", "numeric", "closed_form", "abs_err", "counted"}, rows);
    json summary;
    summary["max_abs_err_away_from_kinks"] = worst;
    summary["tolerance"] = tol;
    summary["passed"] = worst <= tol;
    write_json(dir / "bandlimit.json", summary);
    std::printf("bandlimit: max abs err %.4f away from kinks (tolerance %.2f)\n", worst, tol);
    return worst <= tol ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------- train-lm

TransformerConfig model_config_from(const Settings& s) {
    TransformerConfig c;
    c.layers = static_cast<std::size_t>(s.integer("layers"));
    c.d_model = static_cast<std::size_t>(s.integer("d-model"));
    c.heads = static_cast<std::size_t>(s.integer("heads"));
    c.d_ff = static_cast<std::size_t>(s.integer("d-ff"));
    c.context_len = static_cast<std::size_t>(s.integer("context"));
    c.variant = s.str("variant") == "fourier" ? AttentionVariant::fourier
                                              : AttentionVariant::dot;
    c.phi_exponent = static_cast<int>(s.integer("phi"));
    c.r_init = s.num("r-init");
    c.r_per_dim = s.flag("r-vector");
    c.seed = s.u64("seed");
    return c;
}

TrainConfig train_config_from(const Settings& s) {
    TrainConfig t;
    t.steps = static_cast<std::size_t>(s.integer("steps"));
    t.batch_size = static_cast<std::size_t>(s.integer("batch"));
    t.eval_interval = static_cast<std::size_t>(s.integer("eval-interval"));
    t.eval_windows = static_cast<std::size_t>(s.integer("eval-windows"));
    return t;
}

std::string corpus_from(const Settings& s) {
    if (!s.str("corpus").empty()) return read_text_file(s.str("corpus"));
    return synthetic_corpus(static_cast<std::size_t>(s.integer("synthetic-bytes")),
                            s.u64("seed") ^ 0xC0FFEEull);
}

json report_to_json(const TrainReport& report, const TransformerConfig& config) {
    json j;
    j["variant"] = config.variant == AttentionVariant::fourier ? "fourier" : "dot";
    j["diverged"] = report.diverged;
    if (report.diverged) j["divergence_step"] = report.divergence_step;
    j["fallback_count"] = report.fallback_count;
    j["negative_weight_seen"] = report.negative_weight_seen;
    j["initial_loss"] = report.initial_loss;
    j["final_valid_loss"] = report.final_valid_loss;
    j["final_valid_ppl"] = report.final_valid_ppl;
    json evals = json::array();
    for (const auto& e : report.evals)
        evals.push_back(
            {{"step", e.step}, {"valid_loss", e.valid_loss}, {"valid_ppl", e.valid_ppl}});
    j["evals"] = evals;
    if (config.heads >= 2) {
        j["head_distance"] = {{"mean", report.head_distance.mean},
                              {"std", report.head_distance.stddev},
                              {"normalized_mean", report.head_distance.normalized_mean},
                              {"normalized_std", report.head_distance.normalized_std},
                              {"layer_mean", report.head_distance.layer_mean},
                              {"layer_std", report.head_distance.layer_std}};
    }
    return j;
}

int run_train_lm(Settings s) {
    const fs::path dir = prepare_output_dir(s);
    write_config_echo(dir, s);
    const std::string corpus = corpus_from(s);
    const TransformerConfig config = model_config_from(s);
    const TrainConfig train = train_config_from(s);

    const double h0 = byte_entropy(corpus);
    TransformerModel model(config);
    const TrainReport report = train_lm(corpus, config, train, &model);

    json j = report_to_json(report, config);
    j["corpus_bytes"] = corpus.size();
    j["order0_entropy_nats"] = h0;
    j["order0_ppl"] = std::exp(h0);
    j["beats_order0"] = !report.diverged && report.final_valid_ppl < std::exp(h0);
    j["parameter_count"] = model.parameter_count();
    write_json(dir / "train_report.json", j);

    std::vector<std::vector<double>> step_rows;
    for (const auto& rec : report.steps) {
        std::vector<double> row{static_cast<double>(rec.step), rec.train_loss};
        row.insert(row.end(), rec.r_values.begin(), rec.r_values.end());
        step_rows.push_back(std::move(row));
    }
    std::vector<std::string> header{"step", "train_loss"};
    if (!report.steps.empty())
        for (std::size_t i = 0; i < report.steps.front().r_values.size(); ++i)
            header.push_back("R" + std::to_string(i));
    write_csv((dir / "train_steps.csv").string(), header, step_rows);

    std::vector<std::vector<double>> eval_rows;
    for (const auto& e : report.evals)
        eval_rows.push_back({static_cast<double>(e.step), e.valid_loss, e.valid_ppl});
    write_csv((dir / "train_evals.csv").string(), {"step", "valid_loss", "valid_ppl"},
              eval_rows);

    model.save_checkpoint((dir / "checkpoint.bin").string());
    std::printf("train-lm[%s]: final valid ppl %.3f (order-0 baseline %.3f)%s\n",
                s.str("variant").c_str(), report.final_valid_ppl, std::exp(h0),
                report.diverged ? " DIVERGED" : "");
    return kExitOk;
}

// ------------------------------------------------------------------ ablate

int run_ablate(Settings s, bool phi_grid) {
    const fs::path dir = prepare_output_dir(s);
    write_config_echo(dir, s);
    const std::string corpus = corpus_from(s);
    const TrainConfig train = train_config_from(s);

    std::vector<AblateCell> grid;
    if (phi_grid) {
        for (long l : s.int_list("exponents")) {
            TransformerConfig c = model_config_from(s);
            c.variant = AttentionVariant::fourier;
            c.phi_exponent = static_cast<int>(l);
            grid.push_back({"phi=" + std::to_string(l), c});
        }
    } else {
        for (double r0 : s.num_list("r-inits")) {
            TransformerConfig c = model_config_from(s);
            c.variant = AttentionVariant::fourier;
            c.r_init = r0;
            grid.push_back({"r_init=" + format_double(r0), c});
        }
    }

    const auto results = ablate(grid, corpus, train);
    std::vector<std::vector<double>> rows;
    json jrows = json::array();
    for (const auto& r : results) {
        rows.push_back({static_cast<double>(r.phi_exponent), r.r_init, r.final_valid_ppl,
                        r.diverged ? 1.0 : 0.0, r.negative_weight_probe ? 1.0 : 0.0});
        jrows.push_back({{"label", r.label},
                         {"phi_exponent", r.phi_exponent},
                         {"r_init", r.r_init},
                         {"final_valid_ppl", r.final_valid_ppl},
                         {"diverged", r.diverged},
                         {"negative_weight_probe", r.negative_weight_probe}});
        std::printf("%s: ppl %.3f%s%s\n", r.label.c_str(), r.final_valid_ppl,
                    r.diverged ? " DIVERGED" : "",
                    r.negative_weight_probe ? " NEGATIVE-WEIGHTS" : "");
    }
    const std::string stem = phi_grid ? "ablate_phi" : "ablate_r";
    write_csv((dir / (stem + ".csv")).string(),
              {"phi_exponent", "r_init", "final_valid_ppl", "diverged",
               "negative_weight_probe"},
              rows);
    json j;
    j["cells"] = jrows;
    write_json(dir / (stem + ".json"), j);
    return kExitOk;
}

// ----------------------------------------------------------- head-distance

int run_head_distance(Settings s) {
    const fs::path dir = prepare_output_dir(s);
    write_config_echo(dir, s);

    TransformerModel model(model_config_from(s));
    TrainReport report;
    if (!s.str("checkpoint").empty()) {
        model.load_checkpoint(s.str("checkpoint"));
    } else if (s.integer("steps") > 0) {
        const std::string corpus = corpus_from(s);
        report = train_lm(corpus, model_config_from(s), train_config_from(s), &model);
    }

    // Probe batch from held-out synthetic text.
    const std::string probe_text =
        synthetic_corpus(static_cast<std::size_t>(s.integer("probe-bytes")),
                         s.u64("seed") ^ 0xD15Cull);
    std::vector<std::vector<unsigned char>> batch;
    const std::size_t ctx = model.config().context_len;
    for (std::size_t pos = 0; pos + ctx <= probe_text.size() &&
                              batch.size() < static_cast<std::size_t>(s.integer("probe-windows"));
         pos += ctx)
        batch.emplace_back(probe_text.begin() + pos, probe_text.begin() + pos + ctx);

    const HeadDistanceSummary hd = head_distance(model, batch);
    json j;
    j["mean"] = hd.mean;
    j["std"] = hd.stddev;
    j["normalized_mean"] = hd.normalized_mean;
    j["normalized_std"] = hd.normalized_std;
    j["layer_mean"] = hd.layer_mean;
    j["layer_std"] = hd.layer_std;
    write_json(dir / "head_distance.json", j);
    std::vector<std::vector<double>> rows;
    for (std::size_t l = 0; l < hd.layer_mean.size(); ++l)
        rows.push_back({static_cast<double>(l), hd.layer_mean[l], hd.layer_std[l]});
    write_csv((dir / "head_distance.csv").string(), {"layer", "mean", "std"}, rows);
    std::printf("head-distance: layer-average mean %.4f std %.4f\n", hd.mean, hd.stddev);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"sinc-kernel attention and estimator experiments"};
    app.require_subcommand(1);

    SubcommandParser gradcheck(app, "gradcheck",
                               "finite-difference check of the fused attention backward",
                               {{"dims", "4", "feature dimension D"},
                                {"n", "6", "sequence length"},
                                {"dv", "3", "value dimension"},
                                {"seeds", "25", "random instances per configuration"},
                                {"tol", "1e-4", "max relative error accepted"}});
    SubcommandParser equivalence(app, "equivalence",
                                 "Gaussian kernel regression vs softmax attention",
                                 {{"n", "50", "number of random instances"},
                                  {"max-n", "16", "max sequence length"},
                                  {"max-d", "16", "max feature dimension"},
                                  {"tol", "1e-10", "max absolute gap accepted"}});
    const std::vector<OptionSpec> rate_specs = {
        {"estimator", "fourier", "fourier | gaussian"},
        {"dim", "1", "dimension (1 or 2)"},
        {"phi", "2", "phi exponent"},
        {"n-ladder", "100,400,1600,6400", "sample sizes"},
        {"reps", "50", "Monte Carlo reps per size"},
        {"r-const", "1", "bandwidth proportionality constant"},
        {"gaussian-sigma", "0.5", "fixed sigma for the gaussian estimator"},
        {"family", "gaussian", "key density family"},
        {"grid-lo", "-6", "grid lower bound"},
        {"grid-hi", "6", "grid upper bound"},
        {"grid-points", "201", "grid points per axis"},
        {"true-f", "sin", "regression target function"},
        {"noise-sigma", "0.1", "regression noise sigma"},
        {"test-points", "20", "regression test points"},
        {"slope-max", "", "fail when the fitted slope exceeds this"},
        {"check-decreasing", "0", "fail unless errors strictly decrease"},
    };
    SubcommandParser density_rate(app, "density-rate",
                                  "density estimation error versus sample size", rate_specs);
    SubcommandParser regression_rate(app, "regression-rate",
                                     "regression error versus sample size", rate_specs);
    SubcommandParser bandlimit(app, "bandlimit",
                               "numeric kernel transform vs box/triangle closed forms",
                               {{"r-list", "1,2", "bandwidths"},
                                {"l-list", "1,2", "phi exponents"},
                                {"t-points", "41", "frequencies per [-2R, 2R] sweep"},
                                {"kink-margin", "0.05", "half-width excluded around kinks"},
                                {"tol", "2e-2", "max absolute error accepted"}});
    const std::vector<OptionSpec> model_specs = {
        {"corpus", "", "path to a byte corpus (default: synthesize)"},
        {"synthetic-bytes", "200000", "size of the synthesized corpus"},
        {"layers", "2", "transformer layers"},
        {"d-model", "32", "model width"},
        {"heads", "2", "attention heads"},
        {"d-ff", "128", "feed-forward width"},
        {"context", "64", "context length in bytes"},
        {"variant", "dot", "dot | fourier"},
        {"phi", "4", "phi exponent (fourier variant)"},
        {"r-init", "2", "initial bandwidth"},
        {"r-vector", "0", "per-dimension bandwidth vector"},
        {"steps", "2000", "training steps"},
        {"batch", "4", "sequences per step"},
        {"eval-interval", "250", "steps between validation passes"},
        {"eval-windows", "32", "validation windows"},
    };
    SubcommandParser train(app, "train-lm", "train the byte-level language model", model_specs);
    std::vector<OptionSpec> ablate_phi_specs = model_specs;
    ablate_phi_specs.push_back({"exponents", "1,2,3,4,6", "phi exponents to sweep"});
    SubcommandParser ablate_phi(app, "ablate-phi", "sweep the phi exponent", ablate_phi_specs);
    std::vector<OptionSpec> ablate_r_specs = model_specs;
    ablate_r_specs.push_back({"r-inits", "0.1,1,2,4", "bandwidth initializations to sweep"});
    SubcommandParser ablate_r(app, "ablate-r", "sweep the bandwidth initialization",
                              ablate_r_specs);
    std::vector<OptionSpec> hd_specs = model_specs;
    hd_specs.push_back({"checkpoint", "", "load parameters instead of training"});
    hd_specs.push_back({"probe-bytes", "4096", "bytes of probe text"});
    hd_specs.push_back({"probe-windows", "4", "probe sequences"});
    SubcommandParser head_dist(app, "head-distance",
                               "average pairwise L2 distance between attention heads",
                               hd_specs);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (gradcheck.selected()) return run_gradcheck(gradcheck.resolve());
        if (equivalence.selected()) return run_equivalence(equivalence.resolve());
        if (density_rate.selected())
            return run_rate(density_rate.resolve(), RateKind::density_mise);
        if (regression_rate.selected())
            return run_rate(regression_rate.resolve(), RateKind::regression_mse);
        if (bandlimit.selected()) return run_bandlimit(bandlimit.resolve());
        if (train.selected()) return run_train_lm(train.resolve());
        if (ablate_phi.selected()) return run_ablate(ablate_phi.resolve(), true);
        if (ablate_r.selected()) return run_ablate(ablate_r.resolve(), false);
        if (head_dist.selected()) return run_head_distance(head_dist.resolve());
    } catch (const CLI::ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitCheckFailed;
    }
    return kExitUsage;
}
