#pragma once

// Experiment pipelines behind the logspect command line tool.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "json.hpp"

#include "logspect/graph_io.hpp"
#include "logspect/json_io.hpp"
#include "logspect/logspect.hpp"

namespace logspect::cli {

namespace fs = std::filesystem;

/// Config problems; the tool exits with code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

enum class Method { RLogSpecT, RSpecT, LogSpecT, SpecTIdeal, Correlation };

inline std::string to_string(Method m) {
    switch (m) {
        case Method::RLogSpecT: return "rLogSpecT";
        case Method::RSpecT: return "rSpecT";
        case Method::LogSpecT: return "LogSpecT";
        case Method::SpecTIdeal: return "SpecT-ideal";
        case Method::Correlation: return "Correlation";
    }
    return "?";
}

inline Method parse_method(const std::string& s) {
    for (Method m : {Method::RLogSpecT, Method::RSpecT, Method::LogSpecT, Method::SpecTIdeal, Method::Correlation})
        if (s == to_string(m)) return m;
    throw ConfigError("unknown method '" + s + "'");
}

/// Ideal models read the exact covariance only.
inline bool is_ideal(Method m) { return m == Method::LogSpecT || m == Method::SpecTIdeal; }

struct ExperimentConfig {
    GraphEnsembleSpec ensemble;
    FilterSpec filter = FilterSpec::quadratic();
    std::vector<long long> n_grid{0};  ///< sample counts; 0 is the exact covariance
    DeltaRule delta_rule = DeltaRule::cov_gap(1.0);
    double exact_equivalent_n = 1e6;   ///< n plugged into sqrt-log-n rules for the exact covariance
    Method method = Method::RLogSpecT;
    long long trials = 20;
    std::uint64_t root_seed = 0;
    SolverConfig solver;
    BinarizationStrategy binarization = BinarizationStrategy::searching();
    bool center = false;
    double eps_eq = kEqualityEpsilon;
    FilterLaw filter_law = FilterLaw::random_quadratic();  ///< feascheck only
    std::string output_dir = "logspect-out";
    unsigned threads = 1;

    void validate() const {
        if (trials < 1) throw ConfigError("trials must be at least 1");
        if (n_grid.empty()) throw ConfigError("n_grid must not be empty");
        for (std::size_t i = 0; i < n_grid.size(); ++i) {
            if (n_grid[i] < 0 || n_grid[i] == 1) throw ConfigError("sample counts must be 0 (exact) or at least 2");
            if (i > 0 && !(n_grid[i] > n_grid[i - 1])) throw ConfigError("n_grid must be increasing");
        }
        if (ensemble.m < 2) throw ConfigError("ensemble needs m >= 2");
        if (!(ensemble.p >= 0.0 && ensemble.p <= 1.0)) throw ConfigError("edge probability must lie in [0, 1]");
        if (!(exact_equivalent_n >= 2.0)) throw ConfigError("exact_equivalent_n must be at least 2");
        if (!(eps_eq >= 0.0)) throw ConfigError("eps_eq must be nonnegative");
        if (threads < 1) throw ConfigError("threads must be at least 1");
        if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
        try {
            filter.validate();
            binarization.validate();
            solver.validate(0, 0.0);
        } catch (const ParameterError& e) {
            throw ConfigError(e.what());
        }
    }
};

// ---- configuration as JSON ----

inline Json filter_law_to_json(const FilterLaw& law) {
    if (law.kind == FilterLaw::Kind::Fixed) return {{"kind", "fixed"}, {"filter", to_string(law.fixed)}};
    return {{"kind", "random-quadratic"}, {"sigma", law.sigma}};
}

/// Everything that determines the numbers produced by a run.
inline Json science_json(const ExperimentConfig& c) {
    Json solver = to_json(c.solver);
    return {{"ensemble", {{"family", to_string(c.ensemble.family)}, {"m", c.ensemble.m}, {"p", c.ensemble.p}}},
            {"filter", to_string(c.filter)},
            {"n_grid", c.n_grid},
            {"delta_rule", to_string(c.delta_rule)},
            {"exact_equivalent_n", c.exact_equivalent_n},
            {"method", to_string(c.method)},
            {"trials", c.trials},
            {"root_seed", c.root_seed},
            {"solver", std::move(solver)},
            {"binarization",
             {{"kind", to_string(c.binarization.kind)},
              {"eps", c.binarization.eps},
              {"grid_size", c.binarization.grid_size},
              {"train_set_size", c.binarization.train_set_size}}},
            {"center", c.center},
            {"eps_eq", c.eps_eq},
            {"filter_law", filter_law_to_json(c.filter_law)}};
}

/// Effective configuration including execution-only keys.
inline Json to_json(const ExperimentConfig& c) {
    Json j = science_json(c);
    j["output_dir"] = c.output_dir;
    j["threads"] = c.threads;
    return j;
}

namespace detail {

template <typename F>
void section(const Json& j, const std::string& name, F&& f) {
    if (!j.is_object()) throw ConfigError("section '" + name + "' must be an object");
    for (const auto& [key, v] : j.items()) f(key, v);
}

[[noreturn]] inline void unknown(const std::string& where, const std::string& key) {
    throw ConfigError("unknown key '" + key + "' in " + where);
}

}  // namespace detail

/// Applies the keys present in j; absent keys keep their values.
inline void update_from_json(ExperimentConfig& c, const Json& j) {
    try {
        detail::section(j, "config", [&](const std::string& key, const Json& v) {
            if (key == "ensemble") {
                detail::section(v, key, [&](const std::string& k, const Json& x) {
                    if (k == "family") c.ensemble.family = parse_graph_family(x.get<std::string>());
                    else if (k == "m") c.ensemble.m = x.get<Index>();
                    else if (k == "p") c.ensemble.p = x.get<double>();
                    else detail::unknown("ensemble", k);
                });
            } else if (key == "filter") c.filter = parse_filter(v.get<std::string>());
            else if (key == "n_grid") c.n_grid = v.get<std::vector<long long>>();
            else if (key == "delta_rule") c.delta_rule = parse_delta_rule(v.get<std::string>());
            else if (key == "exact_equivalent_n") c.exact_equivalent_n = v.get<double>();
            else if (key == "method") c.method = parse_method(v.get<std::string>());
            else if (key == "trials") c.trials = v.get<long long>();
            else if (key == "root_seed") c.root_seed = v.get<std::uint64_t>();
            else if (key == "solver") {
                detail::section(v, key, [](const std::string&, const Json&) {});
                logspect::update_from_json(c.solver, v);
            } else if (key == "binarization") {
                detail::section(v, key, [&](const std::string& k, const Json& x) {
                    if (k == "kind") c.binarization.kind = parse_binarization_kind(x.get<std::string>());
                    else if (k == "eps") c.binarization.eps = x.get<double>();
                    else if (k == "grid_size") c.binarization.grid_size = x.get<int>();
                    else if (k == "train_set_size") c.binarization.train_set_size = x.get<int>();
                    else detail::unknown("binarization", k);
                });
            } else if (key == "center") c.center = v.get<bool>();
            else if (key == "eps_eq") c.eps_eq = v.get<double>();
            else if (key == "filter_law") {
                detail::section(v, key, [&](const std::string& k, const Json& x) {
                    if (k == "kind") {
                        const auto s = x.get<std::string>();
                        if (s == "fixed") c.filter_law.kind = FilterLaw::Kind::Fixed;
                        else if (s == "random-quadratic") c.filter_law.kind = FilterLaw::Kind::RandomQuadratic;
                        else throw ConfigError("unknown filter law '" + s + "'");
                    } else if (k == "sigma") c.filter_law.sigma = x.get<double>();
                    else if (k == "filter") c.filter_law.fixed = parse_filter(x.get<std::string>());
                    else detail::unknown("filter_law", k);
                });
            } else if (key == "output_dir") c.output_dir = v.get<std::string>();
            else if (key == "threads") c.threads = v.get<unsigned>();
            else detail::unknown("config", key);
        });
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    } catch (const ParameterError& e) {
        throw ConfigError(e.what());
    } catch (const ParseError& e) {
        throw ConfigError(e.what());
    }
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
    ExperimentConfig c;
    update_from_json(c, j);
    return c;
}

/// Sets one dotted key, e.g. "solver.alpha=2" or "n_grid=[100,1000]". The
/// value is parsed as JSON and taken as a string if that fails.
inline void apply_override(ExperimentConfig& c, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
    const std::string path = assignment.substr(0, eq), text = assignment.substr(eq + 1);
    Json value = Json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    Json patch = value;
    std::string rest = path;
    std::vector<std::string> keys;
    for (std::size_t dot; (dot = rest.find('.')) != std::string::npos; rest = rest.substr(dot + 1))
        keys.push_back(rest.substr(0, dot));
    keys.push_back(rest);
    for (auto it = keys.rbegin(); it != keys.rend(); ++it) patch = Json{{*it, patch}};
    update_from_json(c, patch);
}

// ---- hashing and files ----

inline std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) throw Error("SHA-256 failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return os.str();
}

inline std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("cannot open '" + p.string() + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline std::string sha256_file(const fs::path& p) { return sha256_hex(read_file(p)); }

/// First 16 hex digits of the hash of the science part of the config.
inline std::string config_hash(const ExperimentConfig& c) { return sha256_hex(science_json(c).dump()).substr(0, 16); }

/// output_dir, placed under $LOGSPECT_OUTPUT_ROOT when it is relative and
/// the variable is set.
inline fs::path output_path(const ExperimentConfig& c) {
    fs::path p(c.output_dir);
    if (p.is_relative())
        if (const char* root = std::getenv("LOGSPECT_OUTPUT_ROOT"); root && *root) p = fs::path(root) / p;
    return p;
}

inline fs::path prepare_output(const ExperimentConfig& c) {
    const fs::path dir = output_path(c);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw ConfigError("cannot create output directory '" + dir.string() + "'");
    const fs::path probe = dir / ".write-test";
    {
        std::ofstream out(probe);
        if (!out) throw ConfigError("output directory '" + dir.string() + "' is not writable");
    }
    fs::remove(probe, ec);
    return dir;
}

inline void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + p.string() + "'");
    out << text;
    if (!out) throw ConfigError("write failed for '" + p.string() + "'");
}

/// Manifest: effective config, its hash, and the SHA-256 of each output
/// file (paths relative to the manifest's directory).
inline Json make_manifest(const ExperimentConfig& c, const std::string& command, const fs::path& dir,
                          const std::vector<std::pair<std::string, Json>>& files) {
    Json list = Json::array();
    for (const auto& [rel, extra] : files) {
        Json e = extra;
        e["path"] = rel;
        e["sha256"] = sha256_file(dir / rel);
        list.push_back(std::move(e));
    }
    return {{"command", command}, {"config_hash", config_hash(c)}, {"config", to_json(c)}, {"files", std::move(list)}};
}

/// Paths whose content no longer matches the manifest.
inline std::vector<std::string> verify_manifest(const fs::path& manifest_path) {
    Json m;
    try {
        m = Json::parse(read_file(manifest_path));
    } catch (const Json::exception& e) {
        throw ConfigError("manifest '" + manifest_path.string() + "' is not valid JSON");
    }
    const fs::path dir = manifest_path.parent_path();
    std::vector<std::string> bad;
    for (const auto& f : m.at("files")) {
        const auto rel = f.at("path").get<std::string>();
        const fs::path p = dir / rel;
        if (!fs::exists(p) || sha256_file(p) != f.at("sha256").get<std::string>()) bad.push_back(rel);
    }
    return bad;
}

// ---- trial data ----

/// Graph seed depends on the trial only, so every n of a trial sees the
/// same graph; the signal seed depends on (trial, n).
inline std::uint64_t trial_seed(const ExperimentConfig& c, long long trial, long long n) {
    return derive_seed(c.root_seed, {static_cast<std::uint64_t>(trial), static_cast<std::uint64_t>(n)});
}

inline AdjacencyMatrix trial_graph(const ExperimentConfig& c, long long trial) {
    GraphEnsembleSpec spec = c.ensemble;
    spec.seed = derive_seed(c.root_seed, {0x6772617068ull, static_cast<std::uint64_t>(trial)});
    return generate_without_isolated(spec);
}

inline Matrix trial_signals(const ExperimentConfig& c, const AdjacencyMatrix& g, long long trial, long long n) {
    return sample_signals(c.filter, g, n, trial_seed(c, trial, n));
}

/// Covariance for sample count n (0 is the exact one).
inline CovarianceEstimate trial_covariance(const ExperimentConfig& c, const AdjacencyMatrix& g, long long trial,
                                           long long n) {
    if (n == 0) return true_covariance(c.filter, g);
    return sample_covariance(trial_signals(c, g, trial, n), c.center);
}

inline double trial_delta(const ExperimentConfig& c, long long n, double cov_gap) {
    const double n_eff = n == 0 ? c.exact_equivalent_n : static_cast<double>(n);
    return delta_schedule(c.delta_rule, n_eff, cov_gap);
}

// ---- result rows ----

inline const std::vector<std::string>& result_columns() {
    static const std::vector<std::string> cols{"config_hash", "seed",      "n",         "family", "filter",
                                               "method",      "F",         "precision", "recall", "objective",
                                               "cov_gap",     "delta",     "status"};
    return cols;
}

inline std::string csv_number(double v) { return std::isfinite(v) ? logspect::detail::format_double(v) : "nan"; }

/// Quotes a field when it holds a separator.
inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return out + "\"";
}

inline std::string result_row(const RecoveryReport& r) {
    const std::vector<std::string> f{r.config_hash,
                                     std::to_string(r.seed),
                                     std::to_string(r.n),
                                     r.family,
                                     r.filter,
                                     r.method,
                                     csv_number(r.metrics.f_measure),
                                     csv_number(r.metrics.precision),
                                     csv_number(r.metrics.recall),
                                     csv_number(r.objective),
                                     csv_number(r.cov_gap),
                                     csv_number(r.delta),
                                     r.status};
    std::string line;
    for (std::size_t i = 0; i < f.size(); ++i) line += (i ? "," : "") + csv_field(f[i]);
    return line;
}

inline std::string header_row(const std::vector<std::string>& cols) {
    std::string line;
    for (std::size_t i = 0; i < cols.size(); ++i) line += (i ? "," : "") + cols[i];
    return line;
}

/// Resume key of a row: config hash, seed and n.
inline std::string row_key(const std::string& hash, std::uint64_t seed, long long n) {
    return hash + "|" + std::to_string(seed) + "|" + std::to_string(n);
}

/// Writes rows in task order whatever order the workers finish in, so the
/// file is the same for any thread count and an interrupted file is a
/// prefix of the complete one.
class OrderedSink {
public:
    OrderedSink(std::ostream& out, std::vector<std::size_t> pending) : out_(out), pending_(std::move(pending)) {}

    void put(std::size_t task, std::string line) {
        std::lock_guard lock(mutex_);
        ready_.emplace(task, std::move(line));
        while (next_ < pending_.size()) {
            auto it = ready_.find(pending_[next_]);
            if (it == ready_.end()) break;
            out_ << it->second << '\n';
            out_.flush();
            ready_.erase(it);
            ++next_;
        }
    }

private:
    std::ostream& out_;
    std::vector<std::size_t> pending_;
    std::map<std::size_t, std::string> ready_;
    std::size_t next_ = 0;
    std::mutex mutex_;
};

/// Complete rows of an existing results file. A torn last line from an
/// interrupted run is cut off. Returns the resume keys found.
inline std::set<std::string> load_completed(const fs::path& path, const std::vector<std::string>& columns) {
    std::set<std::string> keys;
    if (!fs::exists(path)) return keys;
    std::string text = read_file(path);
    const auto last_nl = text.rfind('\n');
    const std::string kept = last_nl == std::string::npos ? std::string() : text.substr(0, last_nl + 1);
    if (kept.size() != text.size()) write_text(path, kept);
    std::istringstream in(kept);
    std::string line;
    if (!std::getline(in, line)) return keys;
    if (line != header_row(columns)) throw ConfigError("'" + path.string() + "' has an unexpected header");
    while (std::getline(in, line)) {
        const auto f = logspect::detail::split(line, ',');
        if (f.size() < 3) throw ConfigError("'" + path.string() + "' has a malformed row");
        keys.insert(f[0] + "|" + f[1] + "|" + f[2]);
    }
    return keys;
}

// ---- running one method ----

struct MethodOutput {
    AdjacencyMatrix W;  ///< weighted output
    double objective = std::numeric_limits<double>::quiet_NaN();
    double delta = std::numeric_limits<double>::quiet_NaN();
    std::string status = "ok";
};

/// |C_ij| / sqrt(C_ii C_jj) as pair weights.
inline AdjacencyMatrix correlation_weights(const CovarianceEstimate& cov) {
    const Matrix& C = cov.matrix();
    const Index m = C.rows();
    Vector w(pair_count(m));
    for (Index i = 0; i < m; ++i)
        for (Index j = i + 1; j < m; ++j) {
            const double d = std::sqrt(C(i, i) * C(j, j));
            w[pair_index(m, i, j)] = d > 0.0 ? std::abs(C(i, j)) / d : 0.0;
        }
    return AdjacencyMatrix(m, std::move(w));
}

inline std::string solve_status(const SolveResult& r) { return r.converged ? "ok" : "not_converged"; }

/// Runs the configured method on one covariance. Numerical trouble becomes
/// a status, not an exception.
inline MethodOutput run_method(const ExperimentConfig& c, const CovarianceEstimate& exact,
                               const CovarianceEstimate& cov, long long n, double cov_gap) {
    MethodOutput out;
    out.W = AdjacencyMatrix::empty(exact.matrix().rows());
    SolverConfig cfg = c.solver;
    cfg.record_history = false;
    try {
        switch (c.method) {
            case Method::RLogSpecT: {
                cfg.delta = out.delta = trial_delta(c, n, cov_gap);
                const auto r = solve_rlogspect(cov, cfg);
                out.W = r.S_hat;
                out.objective = r.objective;
                out.status = solve_status(r);
                break;
            }
            case Method::RSpecT: {
                out.delta = trial_delta(c, n, cov_gap);
                const auto r = solve_rspect(cov, out.delta, cfg);
                out.W = r.S_hat;
                out.objective = r.objective;
                out.status = solve_status(r);
                break;
            }
            case Method::LogSpecT: {
                const auto r = solve_logspect(exact, c.solver.alpha, cfg, c.eps_eq);
                out.W = r.S_hat;
                out.objective = r.objective;
                out.delta = r.delta;
                out.status = solve_status(r);
                break;
            }
            case Method::SpecTIdeal: {
                // Same equality stand-in as LogSpecT: commutant surrogate and
                // a radius of eps_eq times its norm.
                const Matrix surrogate = commutant_preconditioner(exact.matrix());
                out.delta = c.eps_eq * std::max(spectral_norm(surrogate), 1.0);
                const auto r = solve_rspect(CovarianceEstimate::exact(surrogate), out.delta, cfg);
                out.W = r.S_hat;
                out.objective = r.objective;
                out.status = solve_status(r);
                break;
            }
            case Method::Correlation: out.W = correlation_weights(cov); break;
        }
    } catch (const InfeasibleError& e) {
        out.status = "infeasible";
    } catch (const DivergenceError& e) {
        out.status = "diverged";
    } catch (const NumericalError& e) {
        out.status = "numerical_error";
    } catch (const ValidationError& e) {
        out.status = "numerical_error";
    }
    return out;
}

/// Correlation thresholds live on [0.1, 0.6]; grid point k of n.
inline double correlation_threshold(int k, int n) { return 0.1 + 0.5 * grid_point(k, n); }

/// Binary graph and metrics for a weighted output.
inline RecoveryMetrics score(const ExperimentConfig& c, const AdjacencyMatrix& W, const AdjacencyMatrix& truth,
                             double trained_eps) {
    const auto& b = c.binarization;
    if (c.method == Method::Correlation) {
        auto at = [&](double thr) {
            Vector e = (W.pair_weights().array() >= thr).cast<double>();
            return metrics(AdjacencyMatrix(W.nodes(), std::move(e)), truth);
        };
        if (b.kind == BinarizationStrategy::Kind::Fixed) return at(b.eps);
        if (b.kind == BinarizationStrategy::Kind::TrainingBased) return at(trained_eps);
        RecoveryMetrics best;
        bool first = true;
        for (int k = 0; k < b.grid_size; ++k) {
            const auto r = at(correlation_threshold(k, b.grid_size));
            if (first || r.f_measure >= best.f_measure) best = r;
            first = false;
        }
        return best;
    }
    switch (b.kind) {
        case BinarizationStrategy::Kind::Fixed: return metrics(binarize(W, b.eps).graph, truth);
        case BinarizationStrategy::Kind::TrainingBased: return metrics(binarize(W, trained_eps).graph, truth);
        case BinarizationStrategy::Kind::SearchingBased: return search_threshold(W, truth, b.grid_size).best;
    }
    return {};
}

/// Threshold learned on train_set_size extra instances per n, drawn with
/// trial indices past the evaluated ones' range so they never coincide.
inline double training_threshold(const ExperimentConfig& c, long long n) {
    std::vector<std::pair<AdjacencyMatrix, AdjacencyMatrix>> pairs(
        static_cast<std::size_t>(c.binarization.train_set_size), {AdjacencyMatrix::empty(2), AdjacencyMatrix::empty(2)});
    parallel_for(pairs.size(), c.threads, [&](std::size_t i) {
        const long long trial = -1 - static_cast<long long>(i);
        const auto g = trial_graph(c, trial);
        const auto exact = true_covariance(c.filter, g);
        const auto cov = n == 0 ? exact : trial_covariance(c, g, trial, n);
        const double gap = n == 0 ? 0.0 : spectral_gap_norm(cov.matrix(), exact.matrix());
        pairs[i] = {run_method(c, exact, cov, n, gap).W, g};
    });
    if (c.method != Method::Correlation) return train_threshold(pairs, c.binarization.grid_size);
    double best_eps = 0.1, best_f = -1.0;
    for (int k = 0; k < c.binarization.grid_size; ++k) {
        const double thr = correlation_threshold(k, c.binarization.grid_size);
        double sum = 0.0;
        for (const auto& [W, truth] : pairs) {
            Vector e = (W.pair_weights().array() >= thr).cast<double>();
            sum += metrics(AdjacencyMatrix(W.nodes(), std::move(e)), truth).f_measure;
        }
        if (sum / static_cast<double>(pairs.size()) >= best_f) {
            best_f = sum / static_cast<double>(pairs.size());
            best_eps = thr;
        }
    }
    return best_eps;
}

struct TrialOutcome {
    RecoveryReport report;
    AdjacencyMatrix W;  ///< weighted output, empty when infeasible
};

inline TrialOutcome run_trial(const ExperimentConfig& c, const std::string& hash, long long trial, long long n,
                              double trained_eps) {
    RecoveryReport r;
    r.config_hash = hash;
    r.seed = trial_seed(c, trial, n);
    r.n = n;
    r.family = to_string(c.ensemble.family);
    r.filter = to_string(c.filter);
    r.method = to_string(c.method);
    const auto g = trial_graph(c, trial);
    const auto exact = true_covariance(c.filter, g);
    const auto cov = n == 0 ? exact : trial_covariance(c, g, trial, n);
    r.cov_gap = n == 0 ? 0.0 : spectral_gap_norm(cov.matrix(), exact.matrix());
    auto out = run_method(c, exact, cov, n, r.cov_gap);
    r.objective = out.objective;
    r.delta = out.delta;
    r.status = out.status;
    if (out.status != "infeasible") r.metrics = score(c, out.W, g, trained_eps);
    return {std::move(r), std::move(out.W)};
}

// ---- subcommands ----

struct RunSummary {
    long long rows_written = 0;
    long long rows_skipped = 0;
    long long failed = 0;  ///< rows whose status is not "ok", over the whole file
};

inline void check_method_grid(const ExperimentConfig& c) {
    if (is_ideal(c.method) && c.n_grid != std::vector<long long>{0})
        throw ConfigError(to_string(c.method) + " reads the exact covariance only; set n_grid to [0]");
}

/// Graph files, signal files and a manifest for every trial.
inline Json cmd_generate(const ExperimentConfig& c) {
    c.validate();
    const fs::path dir = prepare_output(c);
    fs::create_directories(dir / "graphs");
    fs::create_directories(dir / "signals");
    std::vector<std::pair<std::string, Json>> files;
    std::mutex mutex;
    std::vector<std::vector<std::pair<std::string, Json>>> per_trial(static_cast<std::size_t>(c.trials));
    parallel_for(per_trial.size(), c.threads, [&](std::size_t t) {
        const auto trial = static_cast<long long>(t);
        const auto g = trial_graph(c, trial);
        const std::string gname = "graphs/trial_" + std::to_string(trial) + ".graph";
        write_graph(g, (dir / gname).string());
        per_trial[t].push_back({gname, {{"kind", "graph"}, {"trial", trial}}});
        for (long long n : c.n_grid) {
            if (n == 0) continue;
            const std::string sname = "signals/trial_" + std::to_string(trial) + "_n_" + std::to_string(n) + ".csv";
            const std::uint64_t seed = trial_seed(c, trial, n);
            write_signals(trial_signals(c, g, trial, n), (dir / sname).string(), seed, c.filter);
            per_trial[t].push_back({sname, {{"kind", "signals"}, {"trial", trial}, {"n", n}, {"seed", seed}}});
        }
    });
    for (auto& v : per_trial)
        for (auto& f : v) files.push_back(std::move(f));
    Json manifest = make_manifest(c, "generate", dir, files);
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
    return manifest;
}

/// One tidy row per (n, trial) in results.csv, resuming a partial file.
inline RunSummary cmd_solve(const ExperimentConfig& c) {
    c.validate();
    check_method_grid(c);
    const fs::path dir = prepare_output(c);
    const fs::path csv = dir / "results.csv";
    const std::string hash = config_hash(c);
    auto done = load_completed(csv, result_columns());

    struct Task {
        long long trial, n;
    };
    std::vector<Task> tasks;
    for (long long n : c.n_grid)
        for (long long t = 0; t < c.trials; ++t) tasks.push_back({t, n});
    std::vector<std::size_t> pending;
    RunSummary summary;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (done.count(row_key(hash, trial_seed(c, tasks[i].trial, tasks[i].n), tasks[i].n))) ++summary.rows_skipped;
        else pending.push_back(i);
    }

    std::map<long long, double> trained;
    if (c.binarization.kind == BinarizationStrategy::Kind::TrainingBased) {
        std::set<long long> needed;
        for (std::size_t i : pending) needed.insert(tasks[i].n);
        for (long long n : needed) trained[n] = training_threshold(c, n);
    }

    std::ofstream out(csv, std::ios::binary | std::ios::app);
    if (!out) throw ConfigError("cannot write '" + csv.string() + "'");
    if (fs::file_size(csv) == 0) out << header_row(result_columns()) << '\n';
    OrderedSink sink(out, pending);
    parallel_for(pending.size(), c.threads, [&](std::size_t i) {
        const Task& task = tasks[pending[i]];
        const double eps = trained.count(task.n) ? trained[task.n] : 0.0;
        sink.put(pending[i], result_row(run_trial(c, hash, task.trial, task.n, eps).report));
    });
    out.close();
    summary.rows_written = static_cast<long long>(pending.size());

    std::istringstream in(read_file(csv));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line))
        if (line.substr(line.rfind(',') + 1) != "ok") ++summary.failed;

    Json manifest = make_manifest(c, "solve", dir, {{"results.csv", {{"kind", "results"}}}});
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
    return summary;
}

inline const std::vector<std::string>& curve_columns() {
    static const std::vector<std::string> cols{"n",          "trials",          "failed",          "cov_gap_median",
                                               "objective_gap_median", "degree_gap_median", "f_measure_median"};
    return cols;
}

/// Per n, medians over trials of the covariance gap, the relative
/// objective and degree gaps to the LogSpecT reference of the same graph,
/// and F. Writes curve.csv and a manifest.
inline RunSummary cmd_recovery_curve(const ExperimentConfig& c) {
    c.validate();
    if (c.method != Method::RLogSpecT) throw ConfigError("recovery-curve runs rLogSpecT; set method accordingly");
    const fs::path dir = prepare_output(c);
    const std::string hash = config_hash(c);
    const std::size_t T = static_cast<std::size_t>(c.trials);
    const std::size_t N = c.n_grid.size();
    std::vector<RecoveryReport> reports(T * N);
    parallel_for(T, c.threads, [&](std::size_t t) {
        const auto trial = static_cast<long long>(t);
        const auto g = trial_graph(c, trial);
        SolverConfig cfg = c.solver;
        cfg.record_history = false;
        std::optional<SolveResult> ref;
        std::string ref_status = "ok";
        try {
            ref = solve_logspect(true_covariance(c.filter, g), c.solver.alpha, cfg, c.eps_eq);
            if (!ref->converged) ref_status = "reference_not_converged";
        } catch (const NumericalError&) {
            ref_status = "reference_failed";
        }
        for (std::size_t k = 0; k < N; ++k) {
            auto [r, W] = run_trial(c, hash, trial, c.n_grid[k], 0.0);
            if (ref && r.status != "infeasible") {
                const Vector dstar = ref->S_hat.degrees();
                r.objective_gap = std::abs(r.objective - ref->objective) / std::abs(ref->objective);
                r.degree_gap = (W.degrees() - dstar).norm() / dstar.norm();
            }
            if (ref_status != "ok" && r.status == "ok") r.status = ref_status;
            reports[k * T + t] = std::move(r);
        }
    });

    RunSummary summary;
    std::ostringstream os;
    os << header_row(curve_columns()) << '\n';
    for (std::size_t k = 0; k < N; ++k) {
        const std::vector<RecoveryReport> slice(reports.begin() + static_cast<std::ptrdiff_t>(k * T),
                                                reports.begin() + static_cast<std::ptrdiff_t>((k + 1) * T));
        const auto s = aggregate(slice);
        summary.failed += s.failed;
        os << c.n_grid[k] << ',' << s.trials << ',' << s.failed << ',' << csv_number(s.cov_gap.median) << ','
           << csv_number(s.objective_gap.median) << ',' << csv_number(s.degree_gap.median) << ','
           << csv_number(s.f_measure.median) << '\n';
    }
    write_text(dir / "curve.csv", os.str());
    summary.rows_written = static_cast<long long>(N);
    Json manifest = make_manifest(c, "recovery-curve", dir, {{"curve.csv", {{"kind", "curve"}}}});
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
    return summary;
}

inline const std::vector<std::string>& feascheck_columns() {
    static const std::vector<std::string> cols{"n", "trials", "frequency", "mean_delta_min", "unconverged"};
    return cols;
}

/// Infeasibility frequency and mean delta_min per n, written to
/// feascheck.csv. Sample count 0 uses the exact covariance.
inline RunSummary cmd_feascheck(const ExperimentConfig& c) {
    c.validate();
    const fs::path dir = prepare_output(c);
    std::ostringstream os;
    os << header_row(feascheck_columns()) << '\n';
    RunSummary summary;
    for (long long n : c.n_grid) {
        const auto st = infeasibility_frequency(c.ensemble, c.filter_law, n, c.trials,
                                                derive_seed(c.root_seed, {0x66656173ull, static_cast<std::uint64_t>(n)}),
                                                1e-6, c.threads);
        os << n << ',' << c.trials << ',' << csv_number(st.frequency) << ',' << csv_number(st.mean_delta_min) << ','
           << st.unconverged << '\n';
        summary.failed += st.unconverged;
    }
    write_text(dir / "feascheck.csv", os.str());
    summary.rows_written = static_cast<long long>(c.n_grid.size());
    Json manifest = make_manifest(c, "feascheck", dir, {{"feascheck.csv", {{"kind", "feascheck"}}}});
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
    return summary;
}

/// Parses a results.csv written by cmd_solve.
inline std::vector<RecoveryReport> read_results(const fs::path& path) {
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line) || line != header_row(result_columns()))
        throw ConfigError("'" + path.string() + "' is not a results file");
    std::vector<RecoveryReport> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        // No written field holds a comma, so a plain split is enough.
        const auto f = logspect::detail::split(line, ',');
        if (f.size() != result_columns().size()) throw ParseError(lineno, "wrong number of fields");
        auto num = [&](const std::string& s) { return s == "nan" ? std::nan("") : logspect::detail::parse_double(s, lineno); };
        RecoveryReport r;
        r.config_hash = f[0];
        r.seed = std::stoull(f[1]);
        r.n = logspect::detail::parse_int(f[2], lineno);
        r.family = f[3];
        r.filter = f[4];
        r.method = f[5];
        r.metrics.f_measure = num(f[6]);
        r.metrics.precision = num(f[7]);
        r.metrics.recall = num(f[8]);
        r.objective = num(f[9]);
        r.cov_gap = num(f[10]);
        r.delta = num(f[11]);
        r.status = f[12];
        out.push_back(std::move(r));
    }
    return out;
}

/// Summary statistics of a results file, one entry per configuration.
inline Json eval_results(const fs::path& path) {
    const auto reports = read_results(path);
    if (reports.empty()) throw ConfigError("'" + path.string() + "' has no rows");
    Json out = Json::array();
    for (const auto& [key, s] : aggregate_by_configuration(reports)) {
        const auto parts = logspect::detail::split(key, '|');
        Json e = to_json(s);
        e["config_hash"] = parts[0];
        e["family"] = parts[1];
        e["filter"] = parts[2];
        e["method"] = parts[3];
        e["n"] = std::stoll(parts[4]);
        out.push_back(std::move(e));
    }
    return out;
}

/// Metrics of a weighted graph file against a ground-truth graph file.
inline Json eval_graphs(const fs::path& learned, const fs::path& truth, const BinarizationStrategy& b) {
    const auto W = read_graph(learned.string());
    const auto G = read_graph(truth.string());
    double eps = b.eps;
    RecoveryMetrics r;
    if (b.kind == BinarizationStrategy::Kind::SearchingBased) {
        const auto s = search_threshold(W, G, b.grid_size);
        eps = s.eps_star;
        r = s.best;
    } else {
        r = metrics(binarize(W, eps).graph, G);
    }
    Json j = to_json(r);
    j["eps"] = eps;
    return j;
}

}  // namespace logspect::cli
