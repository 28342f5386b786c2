#include "sptrack/applications.hpp"

namespace sptrack {

QuadToy::QuadToy() : primal_(FeasibleSet::unbounded(1)), dual_(FeasibleSet::orthant(1)) {}

double QuadToy::value(const JointState& s, const ParameterVector& h) const {
  const double e = s.primal(0) - h(0);
  return -0.5 * e * e + 0.5 * s.dual(0) * s.dual(0);
}

void QuadToy::gradients(const JointState& s, const ParameterVector& h, Vec& gx, Vec& gl) const {
  gx = Vec::Constant(1, h(0) - s.primal(0));
  gl = Vec::Constant(1, s.dual(0));
}

Mat QuadToy::hessian(const JointState&, const ParameterVector&) const {
  Mat H(2, 2);
  H << -1.0, 0.0, 0.0, 1.0;
  return H;
}

Mat QuadToy::mixed(const JointState&, const ParameterVector&) const {
  Mat X(2, 1);
  X << 1.0, 0.0;
  return X;
}

std::shared_ptr<const QuadToy> make_quad_toy() { return std::make_shared<const QuadToy>(); }

}  // namespace sptrack
