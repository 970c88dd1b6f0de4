#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "dpdlasso/cv.hpp"
#include "dpdlasso/estimator.hpp"
#include "dpdlasso/experiments.hpp"

namespace dpdlasso::io {

inline constexpr const char* kSchemaVersion = "1.0";

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// Writes to `path.tmp` and renames over `path`.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out << content;
    if (!out.flush()) throw Error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.emplace_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace detail

/// Comma-separated numeric table with a header row.
struct Table {
  std::vector<std::string> columns;
  Matrix values;

  std::optional<Index> find(const std::string& name) const {
    for (std::size_t j = 0; j < columns.size(); ++j) {
      if (columns[j] == name) return static_cast<Index>(j);
    }
    return std::nullopt;
  }
};

inline Table parse_csv(const std::string& text, const std::string& source = "input") {
  std::istringstream in(text);
  std::string line;
  Table t;
  int line_no = 0;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto fields = detail::split(line, ',');
    if (t.columns.empty()) {
      t.columns = std::move(fields);
      for (std::size_t a = 0; a < t.columns.size(); ++a) {
        if (t.columns[a].empty()) throw ParseError(source + ": empty column name in header");
        for (std::size_t b = 0; b < a; ++b) {
          if (t.columns[a] == t.columns[b]) {
            throw ParseError(source + ": duplicate column '" + t.columns[a] + "'");
          }
        }
      }
      continue;
    }
    if (fields.size() != t.columns.size()) {
      throw ParseError(source + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(t.columns.size()) + " fields, found " +
                       std::to_string(fields.size()));
    }
    std::vector<double> row;
    for (std::size_t j = 0; j < fields.size(); ++j) {
      const auto v = detail::parse_double(fields[j]);
      if (!v) {
        throw ParseError(source + ":" + std::to_string(line_no) + ": column '" + t.columns[j] +
                         "' is not numeric: '" + fields[j] + "'");
      }
      row.push_back(*v);
    }
    rows.push_back(std::move(row));
  }
  if (t.columns.empty()) throw ParseError(source + ": missing header row");
  t.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(t.columns.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      t.values(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
  }
  return t;
}

/// Dataset plus the column names it came from.
struct LabeledDataset {
  Dataset data;
  std::vector<std::string> feature_names;
  std::string response;
};

inline LabeledDataset to_dataset(const Table& t, const std::string& response) {
  const auto yc = t.find(response);
  if (!yc) throw ParseError("response column '" + response + "' not found");
  std::vector<std::string> names;
  Matrix X(t.values.rows(), static_cast<Index>(t.columns.size()) - 1);
  Index k = 0;
  for (Index j = 0; j < static_cast<Index>(t.columns.size()); ++j) {
    if (j == *yc) continue;
    names.push_back(t.columns[static_cast<std::size_t>(j)]);
    X.col(k++) = t.values.col(j);
  }
  return {Dataset(std::move(X), t.values.col(*yc)), std::move(names), response};
}

inline LabeledDataset read_dataset(const std::filesystem::path& path, const std::string& response) {
  return to_dataset(parse_csv(read_file(path), path.string()), response);
}

inline std::string dataset_csv(const Dataset& data, const std::vector<std::string>& names,
                               const std::string& response) {
  std::string out;
  for (const auto& n : names) out += n + ",";
  out += response + "\n";
  for (Index i = 0; i < data.n(); ++i) {
    for (Index j = 0; j < data.p(); ++j) out += format_double(data.X()(i, j)) + ",";
    out += format_double(data.y()(i)) + "\n";
  }
  return out;
}

inline std::vector<std::string> default_feature_names(Index p) {
  std::vector<std::string> names;
  for (Index j = 1; j <= p; ++j) names.push_back("x" + std::to_string(j));
  return names;
}

// ModelFit JSON ------------------------------------------------------------

struct SavedModel {
  ModelFit fit;
  std::vector<std::string> feature_names;
  std::string response;
};

inline nlohmann::ordered_json model_json(const SavedModel& m) {
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["response"] = m.response;
  j["feature_names"] = m.feature_names;
  j["beta"] = std::vector<double>(m.fit.beta.data(), m.fit.beta.data() + m.fit.beta.size());
  j["intercept"] = m.fit.intercept;
  j["sigma2"] = m.fit.sigma2;
  j["alpha"] = m.fit.alpha;
  j["lambda"] = m.fit.lambda;
  j["n_iter"] = m.fit.n_iter;
  j["converged"] = m.fit.converged;
  j["objective"] = m.fit.objective;
  return j;
}

inline std::string model_to_string(const SavedModel& m) { return model_json(m).dump(2) + "\n"; }

/// Rejects schema versions whose major part is not 1.
inline void check_schema(const nlohmann::json& j) {
  if (!j.contains("schema_version") || !j["schema_version"].is_string()) {
    throw ParseError("missing schema_version");
  }
  const std::string v = j["schema_version"];
  if (v.substr(0, v.find('.')) != "1") throw ParseError("unsupported schema_version " + v);
}

inline SavedModel model_from_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid model JSON: ") + e.what());
  }
  check_schema(j);
  try {
    SavedModel m;
    m.response = j.at("response").get<std::string>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    const auto beta = j.at("beta").get<std::vector<double>>();
    if (beta.size() != m.feature_names.size()) {
      throw ParseError("beta and feature_names differ in length");
    }
    m.fit.beta = Eigen::Map<const Vector>(beta.data(), static_cast<Index>(beta.size()));
    m.fit.intercept = j.at("intercept").get<double>();
    m.fit.sigma2 = j.at("sigma2").get<double>();
    m.fit.alpha = j.at("alpha").get<double>();
    m.fit.lambda = j.at("lambda").get<double>();
    m.fit.n_iter = j.at("n_iter").get<int>();
    m.fit.converged = j.at("converged").get<bool>();
    m.fit.objective = j.at("objective").get<double>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed model JSON: ") + e.what());
  }
}

/// Reorders the table's columns to the model's feature order. Missing and
/// extra columns are reported together; the model's response column is
/// ignored if present.
inline Matrix align_features(const Table& t, const SavedModel& m) {
  std::vector<std::string> missing, extra;
  for (const auto& name : m.feature_names) {
    if (!t.find(name)) missing.push_back(name);
  }
  for (const auto& name : t.columns) {
    if (name == m.response) continue;
    if (std::find(m.feature_names.begin(), m.feature_names.end(), name) == m.feature_names.end()) {
      extra.push_back(name);
    }
  }
  if (!missing.empty() || !extra.empty()) {
    std::string msg = "feature columns do not match the model;";
    auto list = [](const std::vector<std::string>& v) {
      std::string s;
      for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ", " : " ") + v[k];
      return s;
    };
    if (!missing.empty()) msg += " missing:" + list(missing) + ";";
    if (!extra.empty()) msg += " extra:" + list(extra) + ";";
    msg.pop_back();
    throw ParseError(msg);
  }
  Matrix X(t.values.rows(), static_cast<Index>(m.feature_names.size()));
  for (std::size_t j = 0; j < m.feature_names.size(); ++j) {
    X.col(static_cast<Index>(j)) = t.values.col(*t.find(m.feature_names[j]));
  }
  return X;
}

inline std::string predictions_csv(const Vector& pred) {
  std::string out = "row,prediction\n";
  for (Index i = 0; i < pred.size(); ++i) {
    out += std::to_string(i + 1) + "," + format_double(pred(i)) + "\n";
  }
  return out;
}

// Traces and CV ------------------------------------------------------------

inline std::string trace_csv(const IterationTrace& trace) {
  std::string out = "iter,objective,sigma2,beta_rel_change,sigma2_rel_change,safeguards\n";
  for (std::size_t t = 0; t < trace.records.size(); ++t) {
    const auto& r = trace.records[t];
    out += std::to_string(t) + "," + format_double(r.objective) + "," + format_double(r.sigma2) +
           "," + format_double(r.beta_rel_change) + "," + format_double(r.sigma2_rel_change) + "," +
           std::to_string(r.safeguards) + "\n";
  }
  return out;
}

inline std::string cv_csv(const CvResult& cv, bool trimmed) {
  std::string out = trimmed ? "lambda,cv_error,trimmed_cv_error,not_converged\n"
                            : "lambda,cv_error,not_converged\n";
  for (std::size_t k = 0; k < cv.lambda_grid.size(); ++k) {
    out += format_double(cv.lambda_grid[k]) + "," + format_double(cv.cv_error[k]) + ",";
    if (trimmed) out += format_double(cv.trimmed_cv_error[k]) + ",";
    out += std::to_string(cv.not_converged[k]) + "\n";
  }
  return out;
}

inline std::string cv_json(const CvResult& cv, double alpha, int K, std::uint64_t seed,
                           bool trimmed) {
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["alpha"] = alpha;
  j["folds"] = K;
  j["seed"] = seed;
  j["lambda_grid"] = cv.lambda_grid;
  j["cv_error"] = cv.cv_error;
  if (trimmed) j["trimmed_cv_error"] = cv.trimmed_cv_error;
  j["not_converged"] = cv.not_converged;
  j["best_lambda"] = cv.best_lambda;
  j["best_index"] = cv.best_index;
  return j.dump(2) + "\n";
}

/// Row-to-fold table for an audit of the assignment (1-based rows).
inline std::string folds_csv(const FoldAssignment& folds) {
  std::string out = "row,fold\n";
  for (std::size_t i = 0; i < folds.fold_of.size(); ++i) {
    out += std::to_string(i + 1) + "," + std::to_string(folds.fold_of[i]) + "\n";
  }
  return out;
}

// Experiments --------------------------------------------------------------

inline std::string sim_results_csv(const std::vector<SimResult>& rows) {
  std::string out =
      "rep,method,alpha,lambda,rmspe,l2_error,gamma,fp,fn,runtime_ms,converged,rmspe_trimmed_cv\n";
  for (const auto& r : rows) {
    out += std::to_string(r.rep) + "," + r.method + "," + format_double(r.alpha) + "," +
           format_double(r.lambda) + "," + format_double(r.rmspe) + "," +
           format_double(r.l2_error) + "," + std::to_string(r.gamma) + "," +
           std::to_string(r.fp) + "," + std::to_string(r.fn) + "," +
           (r.runtime_ms ? format_double(*r.runtime_ms) : "NA") + "," +
           (r.converged ? "true" : "false") + "," +
           (r.rmspe_trimmed_cv ? format_double(*r.rmspe_trimmed_cv) : "NA") + "\n";
  }
  return out;
}

inline std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string out = "method,metric,median,q1,q3,iqr\n";
  for (const auto& r : rows) {
    out += r.method + "," + r.metric + "," + format_double(r.median) + "," + format_double(r.q1) +
           "," + format_double(r.q3) + "," + format_double(r.iqr()) + "\n";
  }
  return out;
}

inline std::string surface_csv(const LossSurface& s) {
  std::string out = "beta1,beta2,loss\n";
  for (int a = 0; a < s.axis1.steps; ++a) {
    for (int b = 0; b < s.axis2.steps; ++b) {
      out += format_double(s.axis1.at(a)) + "," + format_double(s.axis2.at(b)) + "," +
             format_double(s.values(a, b)) + "\n";
    }
  }
  return out;
}

// Config -------------------------------------------------------------------

struct SimSetup {
  SimConfig config;
  std::vector<Method> methods{Method::lasso(), Method::dpd_lasso(1.0)};
  bool trimmed_cv = false;
};

/// `lasso` or `dpd:<alpha>`, comma separated.
inline std::vector<Method> parse_methods(std::string_view text) {
  std::vector<Method> out;
  for (const auto& tok : detail::split(text, ',')) {
    if (tok == "lasso") {
      out.push_back(Method::lasso());
    } else if (tok.rfind("dpd:", 0) == 0) {
      const auto a = detail::parse_double(std::string_view(tok).substr(4));
      if (!a || *a < 0.0) throw ParseError("bad alpha in method '" + tok + "'");
      out.push_back(Method::dpd_lasso(*a));
    } else {
      throw ParseError("unknown method '" + tok + "'");
    }
  }
  if (out.empty()) throw ParseError("empty method list");
  return out;
}

/// Flat `key = value` lines; `#` starts a comment. Errors name the line.
inline SimSetup parse_sim_config(const std::string& text, const std::string& source = "config") {
  SimSetup setup;
  SimConfig& c = setup.config;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(where + "expected key = value");
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string_view value = detail::trim(line.substr(eq + 1));

    auto real = [&] {
      const auto v = detail::parse_double(value);
      if (!v) throw ParseError(where + "'" + key + "' needs a number");
      return *v;
    };
    auto integer = [&]() -> long long {
      const double v = real();
      if (v != std::floor(v)) throw ParseError(where + "'" + key + "' needs an integer");
      return static_cast<long long>(v);
    };

    if (key == "n") c.n = integer();
    else if (key == "p") c.p = integer();
    else if (key == "p_active") c.p_active = integer();
    else if (key == "rho") c.rho = real();
    else if (key == "snr") c.snr = real();
    else if (key == "intercept_true") c.intercept_true = real();
    else if (key == "coef_low") c.coef_low = real();
    else if (key == "coef_high") c.coef_high = real();
    else if (key == "contamination") c.contamination = real();
    else if (key == "shift_magnitude") c.shift_magnitude = real();
    else if (key == "n_test") c.n_test = integer();
    else if (key == "n_reps") c.n_reps = static_cast<int>(integer());
    else if (key == "rng_seed") c.rng_seed = static_cast<std::uint64_t>(integer());
    else if (key == "dpd_cv_folds") c.dpd_cv_folds = static_cast<int>(integer());
    else if (key == "lasso_cv_folds") c.lasso_cv_folds = static_cast<int>(integer());
    else if (key == "grid_size") c.grid_size = static_cast<int>(integer());
    else if (key == "methods") {
      try {
        setup.methods = parse_methods(value);
      } catch (const ParseError& e) {
        throw ParseError(where + e.what());
      }
    } else if (key == "trimmed_cv") {
      if (value == "true") setup.trimmed_cv = true;
      else if (value == "false") setup.trimmed_cv = false;
      else throw ParseError(where + "'trimmed_cv' needs true or false");
    } else {
      throw ParseError(where + "unknown key '" + key + "'");
    }
  }
  try {
    c.validate();
  } catch (const Error& e) {
    throw ParseError(source + ": " + e.what());
  }
  return setup;
}

}  // namespace dpdlasso::io
