#include "fpaccel/problems/dataset_io.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "fpaccel/rng.hpp"

namespace fpaccel::dataio {

namespace {

constexpr const char* kMarker = "fpaccel-dataset";
constexpr const char* kVersion = "v1";

void write_header(std::ostream& os, const std::string& kind, std::uint64_t seed) {
  os << kMarker << ' ' << kVersion << '\n';
  os << "generator " << rng::kGeneratorName << '\n';
  os << "problem " << kind << '\n';
  os << "seed " << seed << '\n';
}

void write_value(std::ostream& os, double v) {
  if (std::isinf(v)) os << (v > 0 ? "inf" : "-inf");
  else os << v;
}

void write_matrix(std::ostream& os, const std::string& name, const Eigen::MatrixXd& m) {
  os << "begin " << name << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) os << ' ';
      write_value(os, m(i, j));
    }
    os << '\n';
  }
  os << "end\n";
}

struct Parsed {
  std::map<std::string, std::string> header;
  std::map<std::string, Eigen::MatrixXd> sections;
};

double parse_value(const std::string& tok) {
  if (tok == "inf") return std::numeric_limits<double>::infinity();
  if (tok == "-inf") return -std::numeric_limits<double>::infinity();
  return std::stod(tok);
}

Parsed parse(std::istream& is) {
  Parsed out;
  std::string line;
  if (!std::getline(is, line) || line.rfind(kMarker, 0) != 0)
    throw std::runtime_error("dataset: missing format marker");
  std::string section;
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string first;
    ls >> first;
    if (section.empty()) {
      if (first == "begin") {
        ls >> section;
        rows.clear();
        continue;
      }
      std::string rest;
      std::getline(ls, rest);
      if (!rest.empty() && rest.front() == ' ') rest.erase(0, 1);
      out.header[first] = rest;
      continue;
    }
    if (first == "end") {
      Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                        rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (static_cast<Eigen::Index>(rows[i].size()) != m.cols())
          throw std::runtime_error("dataset: ragged section " + section);
        for (std::size_t j = 0; j < rows[i].size(); ++j)
          m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
      }
      out.sections[section] = std::move(m);
      section.clear();
      continue;
    }
    std::vector<double> row;
    row.push_back(parse_value(first));
    std::string tok;
    while (ls >> tok) row.push_back(parse_value(tok));
    rows.push_back(std::move(row));
  }
  if (!section.empty()) throw std::runtime_error("dataset: unterminated section " + section);
  return out;
}

const Eigen::MatrixXd& need(const Parsed& p, const std::string& name) {
  const auto it = p.sections.find(name);
  if (it == p.sections.end()) throw std::runtime_error("dataset: missing section " + name);
  return it->second;
}

std::string need_key(const Parsed& p, const std::string& key) {
  const auto it = p.header.find(key);
  if (it == p.header.end()) throw std::runtime_error("dataset: missing header key " + key);
  return it->second;
}

}  // namespace

void dump(std::ostream& os, const probit::Data& d) {
  const auto flags = os.flags();
  const auto prec = os.precision();
  os.precision(17);
  write_header(os, "probit", d.seed);
  os << "n " << d.n() << "\np " << d.p() << '\n';
  write_matrix(os, "X", d.X);
  write_matrix(os, "y", d.y.cast<double>());
  if (d.beta_true.size() > 0) write_matrix(os, "beta_true", d.beta_true);
  os.flags(flags);
  os.precision(prec);
}

void dump(std::ostream& os, const mvt::Data& d) {
  const auto flags = os.flags();
  const auto prec = os.precision();
  os.precision(17);
  write_header(os, "mvt", d.seed);
  os << "n " << d.n() << "\nq " << d.q() << "\nnu " << d.nu << '\n';
  write_matrix(os, "Y", d.Y);
  if (d.mu_true.size() > 0) write_matrix(os, "mu_true", d.mu_true);
  if (d.sigma_true.size() > 0) write_matrix(os, "sigma_true", d.sigma_true);
  os.flags(flags);
  os.precision(prec);
}

void dump(std::ostream& os, const icens::Data& d) {
  const auto flags = os.flags();
  const auto prec = os.precision();
  os.precision(17);
  write_header(os, "icens", d.seed);
  os << "n " << d.n() << "\np " << d.p() << '\n';
  write_matrix(os, "grid", d.grid);
  write_matrix(os, "L", d.L);
  write_matrix(os, "R", d.R);
  Eigen::MatrixXd a(d.n(), d.p());
  for (Eigen::Index i = 0; i < d.n(); ++i)
    for (Eigen::Index j = 0; j < d.p(); ++j) a(i, j) = d.compatible(i, j) ? 1.0 : 0.0;
  write_matrix(os, "A", a);
  os.flags(flags);
  os.precision(prec);
}

probit::Data load_probit(std::istream& is) {
  const Parsed p = parse(is);
  if (need_key(p, "problem") != "probit") throw std::runtime_error("dataset: not a probit dump");
  probit::Data d;
  d.seed = std::stoull(need_key(p, "seed"));
  d.X = need(p, "X");
  const Eigen::MatrixXd& y = need(p, "y");
  d.y = y.col(0).cast<int>();
  const auto bt = p.sections.find("beta_true");
  if (bt != p.sections.end()) d.beta_true = bt->second.col(0);
  if (d.X.rows() != d.y.size()) throw std::runtime_error("dataset: X/y size mismatch");
  return d;
}

mvt::Data load_mvt(std::istream& is) {
  const Parsed p = parse(is);
  if (need_key(p, "problem") != "mvt") throw std::runtime_error("dataset: not a mvt dump");
  mvt::Data d;
  d.seed = std::stoull(need_key(p, "seed"));
  d.nu = std::stod(need_key(p, "nu"));
  d.Y = need(p, "Y");
  const auto mt = p.sections.find("mu_true");
  if (mt != p.sections.end()) d.mu_true = mt->second.col(0);
  const auto st = p.sections.find("sigma_true");
  if (st != p.sections.end()) d.sigma_true = st->second;
  return d;
}

icens::Data load_icens(std::istream& is) {
  const Parsed p = parse(is);
  if (need_key(p, "problem") != "icens") throw std::runtime_error("dataset: not an icens dump");
  icens::Data d;
  d.seed = std::stoull(need_key(p, "seed"));
  d.grid = need(p, "grid").col(0);
  d.L = need(p, "L").col(0);
  d.R = need(p, "R").col(0);
  const Eigen::MatrixXd& a = need(p, "A");
  const auto n = a.rows();
  const auto pcells = a.cols();
  if (d.grid.size() != pcells + 1) throw std::runtime_error("dataset: grid/A size mismatch");
  d.lo.resize(static_cast<std::size_t>(n));
  d.hi.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    int lo = -1, hi = -1;
    for (Eigen::Index j = 0; j < pcells; ++j) {
      if (a(i, j) != 0.0) {
        const int jj = static_cast<int>(j);
        if (lo < 0) lo = hi = jj;
        else if (hi + 1 == jj) hi = jj;
        else throw std::runtime_error("dataset: noncontiguous compatibility row");
      }
    }
    if (lo < 0) throw std::runtime_error("dataset: empty compatibility row");
    d.lo[static_cast<std::size_t>(i)] = lo;
    d.hi[static_cast<std::size_t>(i)] = hi;
  }
  return d;
}

std::string peek_kind(std::istream& is) {
  const auto pos = is.tellg();
  std::string line, kind;
  std::getline(is, line);
  while (std::getline(is, line)) {
    if (line.rfind("problem ", 0) == 0) {
      kind = line.substr(8);
      break;
    }
    if (line.rfind("begin", 0) == 0) break;
  }
  is.clear();
  is.seekg(pos);
  return kind;
}

}  // namespace fpaccel::dataio
