#include <algorithm>
#include <cmath>
#include <sstream>

#include "sptrack/applications.hpp"
#include "sptrack/errors.hpp"

namespace sptrack {

namespace {

std::string describe(const NumFlow& f) {
  std::ostringstream os;
  os << "flow (" << f.src << "," << f.dst << ") route {";
  for (size_t i = 0; i < f.route.size(); ++i) os << (i ? "," : "") << f.route[i] + 1;
  os << "}";
  return os.str();
}

}  // namespace

void NumInstance::validate() const {
  if (nodes < 2) throw ConfigError("num: at least two nodes required");
  if (links.empty()) throw ConfigError("num: no links");
  if (flows.empty()) throw ConfigError("num: no flows");
  if (!(r_min > -1.0 && r_min <= 0.0)) throw ConfigError("num: r_min must lie in (-1, 0]");
  if (!(r_max > 0.0)) throw ConfigError("num: r_max must be positive");
  if (!(admit_tol >= 0.0)) throw ConfigError("num: admit_tol must be nonnegative");
  for (size_t l = 0; l < links.size(); ++l) {
    const NumLink& k = links[l];
    const std::string id = "num: link " + std::to_string(l + 1);
    if (k.tx < 1 || k.tx > nodes || k.rx < 1 || k.rx > nodes) throw ConfigError(id + " endpoint out of range");
    if (k.tx == k.rx) throw ConfigError(id + " is a self-loop");
    if (!(k.power > 0.0)) throw ConfigError(id + " power must be positive");
    if (k.h_index < 0) throw ConfigError(id + " h_index must be nonnegative");
  }
  for (const NumFlow& f : flows) {
    if (f.src < 1 || f.src > nodes || f.dst < 1 || f.dst > nodes || f.src == f.dst)
      throw ConfigError("num: " + describe(f) + " has invalid endpoints");
    if (f.route.empty()) throw ConfigError("num: " + describe(f) + " is empty");
    for (int l : f.route)
      if (l < 0 || l >= static_cast<int>(links.size()))
        throw ConfigError("num: " + describe(f) + " references an unknown link");
    if (links[f.route.front()].tx != f.src)
      throw ConfigError("num: " + describe(f) + " does not start at the source node");
    for (size_t i = 0; i + 1 < f.route.size(); ++i)
      if (links[f.route[i]].rx != links[f.route[i + 1]].tx)
        throw ConfigError("num: " + describe(f) + " is not a connected path");
    if (links[f.route.back()].rx != f.dst)
      throw ConfigError("num: " + describe(f) + " does not end at the destination node");
    std::vector<int> visited{f.src};
    for (int l : f.route) {
      if (std::find(visited.begin(), visited.end(), links[l].rx) != visited.end())
        throw ConfigError("num: " + describe(f) + " revisits a node");
      visited.push_back(links[l].rx);
    }
  }
}

int NumInstance::q() const {
  int q = 0;
  for (const auto& l : links) q = std::max(q, l.h_index + 1);
  return q;
}

std::vector<CapacityConstraint> NumInstance::constraints() const {
  std::vector<CapacityConstraint> out;
  for (size_t l = 0; l < links.size(); ++l) out.push_back({links[l].rx, {static_cast<int>(l)}});
  for (int k = 1; k <= nodes; ++k) {
    CapacityConstraint c{k, {}};
    for (size_t l = 0; l < links.size(); ++l)
      if (links[l].rx == k) c.links.push_back(static_cast<int>(l));
    const auto it = mac_sum.find(k);
    const bool on = it == mac_sum.end() ? true : it->second;
    if (c.links.size() >= 2 && on) out.push_back(std::move(c));
  }
  return out;
}

double snr_power(double snr_db, double mean_sq_gain) {
  if (!(mean_sq_gain > 0.0)) throw ConfigError("snr normalization needs a positive mean square gain");
  return std::pow(10.0, snr_db / 10.0) / mean_sq_gain;
}

NumInstance num_3node(double snr_db, double mean_sq_gain) {
  NumInstance inst;
  inst.nodes = 3;
  const double P = snr_power(snr_db, mean_sq_gain);
  inst.links = {{1, 2, P, 0}, {2, 3, P, 1}};
  inst.flows = {{1, 2, {0}}, {1, 3, {0, 1}}, {2, 3, {1}}};
  return inst;
}

double constraint_capacity(const NumInstance& inst, const CapacityConstraint& c, const ParameterVector& h) {
  double s = 0.0;
  for (int l : c.links) {
    const double g = h(inst.links[l].h_index);
    s += g * g * inst.links[l].power;
  }
  return std::log1p(s);
}

NumProblem::NumProblem(NumInstance inst, std::string name) : inst_(std::move(inst)), name_(std::move(name)) {
  inst_.validate();
  cons_ = inst_.constraints();
  const int F = static_cast<int>(inst_.flows.size());
  const int C = static_cast<int>(cons_.size());
  R_ = Mat::Zero(C, F);
  for (int c = 0; c < C; ++c)
    for (int f = 0; f < F; ++f)
      for (int l : inst_.flows[f].route)
        if (std::find(cons_[c].links.begin(), cons_[c].links.end(), l) != cons_[c].links.end()) R_(c, f) += 1.0;
  primal_ = FeasibleSet::box(Vec::Constant(F, inst_.r_min), Vec::Constant(F, inst_.r_max));
  dual_ = FeasibleSet::orthant(C + F);
  if (!inst_.groups.empty()) node_partition().validate(F + C + F);
}

Dimensions NumProblem::dims() const {
  const int F = static_cast<int>(inst_.flows.size());
  return {F, static_cast<int>(cons_.size()) + F, inst_.q()};
}

ModuliHint NumProblem::moduli_hint() const {
  const double d = 1.0 + inst_.r_max;
  return {1.0 / (d * d), 0.0};
}

Vec NumProblem::capacities(const ParameterVector& h) const {
  Vec c(cons_.size());
  for (size_t i = 0; i < cons_.size(); ++i) c(i) = constraint_capacity(inst_, cons_[i], h);
  return c;
}

double NumProblem::value(const JointState& s, const ParameterVector& h) const {
  const Eigen::Index F = s.primal.size(), C = R_.rows();
  const Vec& r = s.primal;
  double u = 0.0;
  for (Eigen::Index f = 0; f < F; ++f) u += std::log1p(r(f));
  return u - s.dual.head(C).dot(R_ * r - capacities(h)) + s.dual.tail(F).dot(r);
}

void NumProblem::gradients(const JointState& s, const ParameterVector& h, Vec& gx, Vec& gl) const {
  const Eigen::Index F = s.primal.size(), C = R_.rows();
  const Vec& r = s.primal;
  gx = (1.0 + r.array()).inverse().matrix() - R_.transpose() * s.dual.head(C) + s.dual.tail(F);
  gl.resize(C + F);
  gl.head(C) = capacities(h) - R_ * r;
  gl.tail(F) = r;
}

Mat NumProblem::hessian(const JointState& s, const ParameterVector&) const {
  const Eigen::Index F = s.primal.size(), C = R_.rows();
  Mat H = Mat::Zero(F + C + F, F + C + F);
  for (Eigen::Index f = 0; f < F; ++f) {
    const double d = 1.0 + s.primal(f);
    H(f, f) = -1.0 / (d * d);
  }
  H.block(0, F, F, C) = -R_.transpose();
  H.block(0, F + C, F, F) = Mat::Identity(F, F);
  H.block(F, 0, C, F) = -R_;
  H.block(F + C, 0, F, F) = Mat::Identity(F, F);
  return H;
}

Mat NumProblem::mixed(const JointState& s, const ParameterVector& h) const {
  const Eigen::Index F = s.primal.size(), C = R_.rows();
  Mat X = Mat::Zero(F + C + F, h.size());
  for (Eigen::Index c = 0; c < C; ++c) {
    double sum = 0.0;
    for (int l : cons_[c].links) {
      const double g = h(inst_.links[l].h_index);
      sum += g * g * inst_.links[l].power;
    }
    for (int l : cons_[c].links) {
      const int j = inst_.links[l].h_index;
      X(F + c, j) += 2.0 * h(j) * inst_.links[l].power / (1.0 + sum);
    }
  }
  return X;
}

Partition NumProblem::node_partition() const {
  const int F = static_cast<int>(inst_.flows.size());
  const int C = static_cast<int>(cons_.size());
  Partition p;
  if (!inst_.groups.empty()) {
    p.groups = inst_.groups;
    return p;
  }
  std::map<int, std::vector<int>> owner;
  for (int f = 0; f < F; ++f) owner[inst_.flows[f].src].push_back(f);
  for (int c = 0; c < C; ++c) {
    const int node = cons_[c].links.size() == 1 ? inst_.links[cons_[c].links[0]].tx : cons_[c].node;
    owner[node].push_back(F + c);
  }
  for (int f = 0; f < F; ++f) owner[inst_.flows[f].src].push_back(F + C + f);
  for (auto& [node, g] : owner) {
    std::sort(g.begin(), g.end());
    p.groups.push_back(g);
  }
  return p;
}

double throughput(const NumInstance& inst, const Vec& r, const ParameterVector& h) {
  const size_t L = inst.links.size();
  std::vector<double> load(L, 0.0);
  for (size_t f = 0; f < inst.flows.size(); ++f)
    for (int l : inst.flows[f].route) load[l] += std::max(r(f), 0.0);
  const double slack = 1.0 + inst.admit_tol;
  std::vector<bool> ok(inst.nodes + 1, true);
  for (size_t l = 0; l < L; ++l) {
    const CapacityConstraint c{inst.links[l].rx, {static_cast<int>(l)}};
    if (load[l] > slack * constraint_capacity(inst, c, h)) ok[inst.links[l].rx] = false;
  }
  for (const auto& c : inst.constraints()) {
    if (c.links.size() < 2) continue;
    double sum = 0.0;
    for (int l : c.links) sum += load[l];
    if (sum > slack * constraint_capacity(inst, c, h)) ok[c.node] = false;
  }
  double total = 0.0;
  for (size_t f = 0; f < inst.flows.size(); ++f) {
    bool admitted = true;
    for (int l : inst.flows[f].route) admitted = admitted && ok[inst.links[l].rx];
    if (admitted) total += std::max(r(f), 0.0);
  }
  return total;
}

std::shared_ptr<const NumProblem> make_num(const NumInstance& inst, const std::string& name) {
  return std::make_shared<const NumProblem>(inst, name);
}

}  // namespace sptrack
