#include "zihmm/trace.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace zihmm {

namespace {

const std::vector<std::string> kStatColumns = {"state", "posterior", "likelihood", "prior"};

std::string idx(std::size_t i) { return std::to_string(i + 1); }

double parse_double(const std::string& field, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (field.empty() || end != field.c_str() + field.size()) {
    throw ValidationError("trace line " + std::to_string(line) + ": bad number '" + field + "'");
  }
  return v;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, '\t')) {
    out.push_back(field);
  }
  if (!line.empty() && line.back() == '\t') {
    out.emplace_back();
  }
  return out;
}

}  // namespace

std::vector<double> Trace::column(const std::string& name) const {
  std::vector<double> out;
  out.reserve(rows.size());
  if (name == "posterior" || name == "likelihood" || name == "prior" || name == "state") {
    for (const TraceRow& r : rows) {
      out.push_back(name == "posterior"    ? r.log_posterior
                    : name == "likelihood" ? r.log_likelihood
                    : name == "prior"      ? r.log_prior
                                           : static_cast<double>(r.iteration));
    }
    return out;
  }
  const auto names = parameter_names(K);
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) {
    throw ValidationError("unknown trace column '" + name + "'");
  }
  const auto pos = static_cast<std::size_t>(it - names.begin());
  for (const TraceRow& r : rows) {
    out.push_back(r.values[pos]);
  }
  return out;
}

std::vector<std::string> parameter_names(std::size_t K) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < K; ++i) {
    for (std::size_t j = 0; j < K; ++j) {
      names.push_back("gamma_" + idx(i) + "_" + idx(j));
    }
  }
  for (std::size_t k = 0; k < K; ++k) names.push_back("delta_" + idx(k));
  for (std::size_t k = 0; k < K; ++k) names.push_back("p_" + idx(k));
  for (std::size_t k = 0; k < K; ++k) names.push_back("mu_lon_" + idx(k));
  for (std::size_t k = 0; k < K; ++k) names.push_back("mu_lat_" + idx(k));
  for (std::size_t k = 0; k < K; ++k) names.push_back("sigma_11_" + idx(k));
  for (std::size_t k = 0; k < K; ++k) names.push_back("sigma_12_" + idx(k));
  for (std::size_t k = 0; k < K; ++k) names.push_back("sigma_22_" + idx(k));
  return names;
}

std::vector<double> flatten(const HmmParams& params) {
  const std::size_t K = params.K();
  std::vector<double> v;
  v.reserve(K * K + 7 * K);
  for (std::size_t i = 0; i < K; ++i) {
    for (std::size_t j = 0; j < K; ++j) {
      v.push_back(params.gamma()(i, j));
    }
  }
  for (std::size_t k = 0; k < K; ++k) v.push_back(params.delta()(k));
  for (const auto& s : params.states()) v.push_back(s.p());
  for (const auto& s : params.states()) v.push_back(s.mu()(0));
  for (const auto& s : params.states()) v.push_back(s.mu()(1));
  for (const auto& s : params.states()) v.push_back(s.sigma()(0, 0));
  for (const auto& s : params.states()) v.push_back(s.sigma()(0, 1));
  for (const auto& s : params.states()) v.push_back(s.sigma()(1, 1));
  return v;
}

HmmParams unflatten(std::span<const double> values, std::size_t K) {
  if (values.size() != K * K + 7 * K) {
    throw ValidationError("parameter vector has wrong length for K=" + std::to_string(K));
  }
  Matrix gamma(K, K);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < K; ++i) {
    for (std::size_t j = 0; j < K; ++j) {
      gamma(i, j) = values[pos++];
    }
  }
  Vector delta(K);
  for (std::size_t k = 0; k < K; ++k) delta(k) = values[pos + k];
  const std::size_t off = K * K + K;
  std::vector<StateEmission> states;
  states.reserve(K);
  for (std::size_t k = 0; k < K; ++k) {
    Eigen::Matrix2d sigma;
    sigma << values[off + 3 * K + k], values[off + 4 * K + k], values[off + 4 * K + k],
        values[off + 5 * K + k];
    states.emplace_back(values[off + k], Point(values[off + K + k], values[off + 2 * K + k]),
                        sigma);
  }
  return HmmParams(std::move(gamma), std::move(delta), std::move(states));
}

void write_trace(std::ostream& os, const Trace& trace) {
  const auto names = parameter_names(trace.K);
  for (std::size_t c = 0; c < kStatColumns.size(); ++c) {
    os << (c ? "\t" : "") << kStatColumns[c];
  }
  for (const auto& n : names) {
    os << '\t' << n;
  }
  os << '\n';
  os << std::setprecision(17);
  for (const TraceRow& r : trace.rows) {
    os << r.iteration << '\t' << r.log_posterior << '\t' << r.log_likelihood << '\t'
       << r.log_prior;
    for (double v : r.values) {
      os << '\t' << v;
    }
    os << '\n';
  }
}

void write_trace(const std::string& path, const Trace& trace) {
  std::ofstream out(path);
  if (!out) {
    throw ValidationError("cannot open trace file for writing: " + path);
  }
  write_trace(out, trace);
}

Trace read_trace(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) {
    throw ValidationError("trace file is empty");
  }
  const auto header = split_tabs(line);
  if (header.size() < kStatColumns.size() ||
      !std::equal(kStatColumns.begin(), kStatColumns.end(), header.begin())) {
    throw ValidationError("trace header must start with state, posterior, likelihood, prior");
  }
  const std::size_t nparams = header.size() - kStatColumns.size();
  // K^2 + 7K = nparams
  std::size_t K = 0;
  while (K * K + 7 * K < nparams) {
    ++K;
  }
  if (K == 0 || K * K + 7 * K != nparams) {
    throw ValidationError("trace header has an unexpected number of parameter columns");
  }
  const auto names = parameter_names(K);
  if (!std::equal(names.begin(), names.end(), header.begin() + 4)) {
    throw ValidationError("trace header parameter columns are not recognised");
  }

  Trace trace;
  trace.K = K;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) {
      continue;
    }
    const auto fields = split_tabs(line);
    if (fields.size() != header.size()) {
      throw ValidationError("trace line " + std::to_string(lineno) + ": wrong field count");
    }
    TraceRow row;
    std::size_t it = 0;
    const auto res = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), it);
    if (res.ec != std::errc() || res.ptr != fields[0].data() + fields[0].size()) {
      throw ValidationError("trace line " + std::to_string(lineno) + ": bad state index");
    }
    row.iteration = it;
    row.log_posterior = parse_double(fields[1], lineno);
    row.log_likelihood = parse_double(fields[2], lineno);
    row.log_prior = parse_double(fields[3], lineno);
    row.values.reserve(nparams);
    for (std::size_t c = 4; c < fields.size(); ++c) {
      row.values.push_back(parse_double(fields[c], lineno));
    }
    if (!trace.rows.empty() && row.iteration <= trace.rows.back().iteration) {
      throw ValidationError("trace line " + std::to_string(lineno) +
                            ": state indices must increase");
    }
    trace.rows.push_back(std::move(row));
  }
  return trace;
}

Trace read_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open trace file: " + path);
  }
  return read_trace(in);
}

}  // namespace zihmm
