#include "exmix/io.hpp"

#include "exmix/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace exmix {

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_number(const std::string& cell, const std::string& where) {
  if (cell.empty()) throw ParseError(where + ": missing value");
  double x = 0.0;
  const char* first = cell.data();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, cell.data() + cell.size(), x);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
    throw ParseError(where + ": '" + cell + "' is not a number");
  }
  return x;
}

std::string number(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

RawDataset read_csv(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  RawDataset out;
  std::vector<std::vector<double>> rows;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto cells = split_line(line);
    const std::string where = source + ":" + std::to_string(line_no);
    if (!have_header) {
      for (const auto& c : cells) {
        if (c.empty()) throw ParseError(where + ": empty column name");
      }
      out.feature_names = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != out.feature_names.size()) {
      throw ParseError(where + ": expected " + std::to_string(out.feature_names.size()) + " cells, found " +
                       std::to_string(cells.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) {
      row.push_back(parse_number(cells[j], where + " column '" + out.feature_names[j] + "'"));
    }
    rows.push_back(std::move(row));
  }
  if (!have_header) throw ParseError(source + ": no header row");
  out.rows.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(out.feature_names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      out.rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return out;
}

RawDataset read_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_csv(in, path.string());
}

std::vector<double> take_column(RawDataset& data, const std::string& name) {
  const auto it = std::find(data.feature_names.begin(), data.feature_names.end(), name);
  if (it == data.feature_names.end()) throw InputError("no column named '" + name + "'");
  const auto col = static_cast<Eigen::Index>(it - data.feature_names.begin());
  std::vector<double> values(data.n());
  for (Eigen::Index i = 0; i < data.rows.rows(); ++i) values[static_cast<std::size_t>(i)] = data.rows(i, col);
  RowMatrix rest(data.rows.rows(), data.rows.cols() - 1);
  rest << data.rows.leftCols(col), data.rows.rightCols(data.rows.cols() - col - 1);
  data.rows = std::move(rest);
  data.feature_names.erase(it);
  return values;
}

std::string to_csv(const RowMatrix& m, const std::vector<std::string>& header) {
  if (header.size() != static_cast<std::size_t>(m.cols())) throw LengthMismatch("CSV header does not match the column count");
  std::string out;
  for (std::size_t j = 0; j < header.size(); ++j) out += (j ? "," : "") + header[j];
  out += '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += number(m(i, j));
    }
    out += '\n';
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("write failed for " + path.string());
}

nlohmann::json parse_json(const std::string& text, const std::string& source) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(source + ": " + e.what());
  }
}

nlohmann::json support_to_json(const SupportSet& support) {
  nlohmann::json j;
  j["d"] = support.d;
  j["faces"] = nlohmann::json::array();
  for (const auto& f : support.faces) j["faces"].push_back(f.members());
  j["face_mass"] = support.face_mass;
  j["singletons"] = support.singletons;
  j["singleton_mass"] = support.singleton_mass;
  j["dropped_nested"] = nlohmann::json::array();
  for (const auto& f : support.dropped_nested) j["dropped_nested"].push_back(f.members());
  return j;
}

SupportSet support_from_json(const nlohmann::json& j) {
  try {
    SupportSet s;
    s.d = j.at("d").get<std::size_t>();
    for (const auto& f : j.at("faces")) s.faces.emplace_back(f.get<std::vector<int>>());
    s.singletons = j.at("singletons").get<std::vector<int>>();
    s.face_mass = j.value("face_mass", std::vector<double>(s.faces.size(), 0.0));
    s.singleton_mass = j.value("singleton_mass", std::vector<double>(s.singletons.size(), 0.0));
    if (j.contains("dropped_nested")) {
      for (const auto& f : j.at("dropped_nested")) s.dropped_nested.emplace_back(f.get<std::vector<int>>());
    }
    if (s.face_mass.size() != s.faces.size() || s.singleton_mass.size() != s.singletons.size()) {
      throw ParseError("support: mass arrays do not match the faces");
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("support: ") + e.what());
  }
}

nlohmann::json theta_to_json(const ThetaParams& theta) {
  nlohmann::json j;
  j["r0"] = theta.r0();
  j["support"] = support_to_json(theta.support());
  j["rho"] = nlohmann::json::array();
  for (Eigen::Index k = 0; k < theta.rho().rows(); ++k) {
    nlohmann::json row = nlohmann::json::array();
    for (int c : theta.support().faces[static_cast<std::size_t>(k)].members()) row.push_back(theta.rho()(k, c));
    j["rho"].push_back(std::move(row));
  }
  j["nu"] = to_vector(theta.nu());
  j["lambda"] = to_vector(theta.lambda());
  std::vector<double> weights;
  for (std::size_t k = 0; k < theta.components(); ++k) weights.push_back(theta.weight(k));
  j["weights"] = weights;
  return j;
}

ThetaParams theta_from_json(const nlohmann::json& j) {
  try {
    auto support = support_from_json(j.at("support"));
    const auto K = static_cast<Eigen::Index>(support.K());
    Eigen::MatrixXd rho = Eigen::MatrixXd::Zero(K, static_cast<Eigen::Index>(support.d));
    const auto& rows = j.at("rho");
    if (rows.size() != support.K()) throw ParseError("model: rho has the wrong number of rows");
    for (std::size_t k = 0; k < support.K(); ++k) {
      const auto& mem = support.faces[k].members();
      const auto vals = rows[k].get<std::vector<double>>();
      if (vals.size() != mem.size()) throw ParseError("model: rho row " + std::to_string(k) + " has the wrong length");
      for (std::size_t m = 0; m < mem.size(); ++m) rho(static_cast<Eigen::Index>(k), mem[m]) = vals[m];
    }
    const auto nu = j.at("nu").get<std::vector<double>>();
    const auto lambda = j.at("lambda").get<std::vector<double>>();
    return ThetaParams(std::move(support), std::move(rho),
                       Eigen::Map<const Eigen::VectorXd>(nu.data(), static_cast<Eigen::Index>(nu.size())),
                       Eigen::Map<const Eigen::VectorXd>(lambda.data(), static_cast<Eigen::Index>(lambda.size())),
                       j.at("r0").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model: ") + e.what());
  }
}

nlohmann::json fit_to_json(const FitResult& result) {
  nlohmann::json j;
  j["theta"] = theta_to_json(result.theta);
  j["q_trace"] = result.q_trace;
  j["iterations"] = result.iterations;
  j["converged"] = result.converged;
  j["frozen_components"] = result.frozen_components;
  j["warnings"] = result.warnings;
  return j;
}

std::string gamma_to_csv(const PosteriorMatrix& gamma, const std::vector<std::size_t>& row_ids) {
  if (row_ids.size() != static_cast<std::size_t>(gamma.gamma.rows())) throw LengthMismatch("row ids do not match gamma");
  std::string out = "row";
  for (Eigen::Index k = 0; k < gamma.gamma.cols(); ++k) out += ",c" + std::to_string(k);
  out += '\n';
  for (Eigen::Index i = 0; i < gamma.gamma.rows(); ++i) {
    out += std::to_string(row_ids[static_cast<std::size_t>(i)]);
    for (Eigen::Index k = 0; k < gamma.gamma.cols(); ++k) out += "," + number(gamma.gamma(i, k));
    out += '\n';
  }
  return out;
}

PosteriorMatrix gamma_from_csv(std::istream& in, std::vector<std::size_t>* row_ids) {
  auto table = read_csv(in, "posteriors");
  const auto ids = take_column(table, "row");
  if (row_ids) {
    row_ids->clear();
    for (double x : ids) row_ids->push_back(static_cast<std::size_t>(x));
  }
  return PosteriorMatrix{Eigen::MatrixXd(table.rows)};
}

std::string trace_to_jsonl(const std::vector<IterationRecord>& trace) {
  std::string out;
  for (const auto& r : trace) {
    nlohmann::json j{{"iteration", r.iteration}, {"q", r.q}, {"bound", r.bound},
                     {"e_step_ms", r.e_step_ms}, {"lambda_ms", r.lambda_ms}, {"rho_nu_ms", r.rho_nu_ms}};
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace exmix
