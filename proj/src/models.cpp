#include "deltacert/models.hpp"

#include <cmath>

#include "deltacert/log.hpp"

namespace deltacert {

void BouncingBallParams::validate() const {
  if (g <= 0.0) throw DegenerateConfig("gravity must be positive");
  if (e < 0.0 || e > 1.0) {
    throw DegenerateConfig("restitution must lie in [0, 1]");
  }
  if (u0 < 0.0) throw DegenerateConfig("impact kick must be >= 0");
  if (e == 1.0) log_warn("restitution 1 has no isolated fixed point");
  if (u0 == 0.0) log_warn("zero impact kick collapses the orbit to rest");
}

HybridSystemModel bouncing_ball(const BouncingBallParams& p) {
  p.validate();
  HybridSystemModel sys;
  sys.dim = 2;
  sys.name = "bouncing_ball";
  sys.vector_field = [g = p.g](const Vector& x) {
    Vector f(2);
    f << x(1), -g;
    return f;
  };
  sys.guard = [](const Vector& x) { return x(0); };
  sys.guard_gradient = [](const Vector&) {
    Vector grad(2);
    grad << 1.0, 0.0;
    return grad;
  };
  sys.reset = [e = p.e, u0 = p.u0](const Vector& x) {
    Vector out(2);
    out << x(0), -e * x(1) + u0;
    return out;
  };
  sys.guard_min = -0.3;
  sys.guard_max = 0.3;
  sys.state_scale = Vector::Ones(2);
  sys.state_names = {"height", "velocity"};
  sys.params = {{"g", p.g}, {"e", p.e}, {"u0", p.u0}};
  return sys;
}

double bouncing_ball_analytic_map(const BouncingBallParams& p, double v_minus,
                                  double y_prev, double d) {
  const double v_plus = -p.e * v_minus + p.u0;
  const double radicand = v_plus * v_plus + 2.0 * p.g * (y_prev - d);
  if (radicand < 0.0 || (v_plus <= 0.0 && y_prev < d)) {
    throw NoImpact("ballistic apex stays below the guard level");
  }
  return -std::sqrt(radicand);
}

HybridSystemModel fragile_ball(const BouncingBallParams& p, double band) {
  if (band <= 0.0) {
    throw DegenerateConfig("reset acceptance band must be positive");
  }
  if (p.e >= 1.0) {
    throw DegenerateConfig("fragile ball needs restitution < 1");
  }
  HybridSystemModel sys = bouncing_ball(p);
  sys.name = "fragile_ball";
  const double v_nominal = -p.u0 / (1.0 - p.e);
  sys.reset = [e = p.e, u0 = p.u0, v_nominal, band](const Vector& x) {
    if (std::abs(x(1) - v_nominal) > band) {
      throw ResetDomainError("impact velocity outside the acceptance band");
    }
    Vector out(2);
    out << x(0), -e * x(1) + u0;
    return out;
  };
  sys.params["band"] = band;
  return sys;
}

void CompassGaitParams::validate() const {
  if (m <= 0.0 || m_h <= 0.0 || a <= 0.0 || b <= 0.0 || length <= 0.0 ||
      g <= 0.0) {
    throw DegenerateConfig("walker masses and lengths must be positive");
  }
  if (std::abs(a + b - length) > 1e-12) {
    throw DegenerateConfig("leg segment lengths must satisfy a + b = length");
  }
  if (slope <= 0.0 || slope >= 0.3) {
    throw DegenerateConfig("slope must lie in (0, 0.3) rad");
  }
}

Matrix compass_mass_matrix(const CompassGaitParams& p, const Vector& q) {
  const double c12 = std::cos(q(0) - q(1));
  Matrix d(2, 2);
  d(0, 0) = p.m * p.a * p.a + (p.m_h + p.m) * p.length * p.length;
  d(0, 1) = -p.m * p.length * p.b * c12;
  d(1, 0) = d(0, 1);
  d(1, 1) = p.m * p.b * p.b;
  return d;
}

Vector compass_bias(const CompassGaitParams& p, const Vector& q,
                    const Vector& qd) {
  const double s12 = std::sin(q(0) - q(1));
  const double mlb = p.m * p.length * p.b;
  Vector bias(2);
  bias(0) = -mlb * s12 * qd(1) * qd(1) -
            p.g * (p.m * p.a + (p.m_h + p.m) * p.length) * std::sin(q(0));
  bias(1) = mlb * s12 * qd(0) * qd(0) + p.g * p.m * p.b * std::sin(q(1));
  return bias;
}

double compass_kinetic_energy(const CompassGaitParams& p, const Vector& x) {
  const Vector q = x.head(2);
  const Vector qd = x.tail(2);
  return 0.5 * qd.dot(compass_mass_matrix(p, q) * qd);
}

double compass_energy(const CompassGaitParams& p, const Vector& x) {
  const double potential =
      p.g * ((p.m * p.a + (p.m_h + p.m) * p.length) * std::cos(x(0)) -
             p.m * p.b * std::cos(x(1)));
  return compass_kinetic_energy(p, x) + potential;
}

Matrix compass_extended_mass(const CompassGaitParams& p, const Vector& q) {
  const double c1 = p.m * p.a + (p.m_h + p.m) * p.length;
  Matrix d = Matrix::Zero(4, 4);
  d.topLeftCorner<2, 2>() = compass_mass_matrix(p, q);
  d(0, 2) = c1 * std::cos(q(0));
  d(0, 3) = -c1 * std::sin(q(0));
  d(1, 2) = -p.m * p.b * std::cos(q(1));
  d(1, 3) = p.m * p.b * std::sin(q(1));
  d(2, 0) = d(0, 2);
  d(3, 0) = d(0, 3);
  d(2, 1) = d(1, 2);
  d(3, 1) = d(1, 3);
  d(2, 2) = 2.0 * p.m + p.m_h;
  d(3, 3) = 2.0 * p.m + p.m_h;
  return d;
}

Matrix compass_swing_jacobian(const CompassGaitParams& p, const Vector& q) {
  Matrix j = Matrix::Zero(2, 4);
  j(0, 0) = p.length * std::cos(q(0));
  j(0, 1) = -p.length * std::cos(q(1));
  j(0, 2) = 1.0;
  j(1, 0) = -p.length * std::sin(q(0));
  j(1, 1) = p.length * std::sin(q(1));
  j(1, 3) = 1.0;
  return j;
}

Vector compass_impact(const CompassGaitParams& p, const Vector& x_minus) {
  const Vector q = x_minus.head(2);
  const Matrix d_e = compass_extended_mass(p, q);
  const Matrix j_sw = compass_swing_jacobian(p, q);
  Vector qdot_e = Vector::Zero(4);
  qdot_e(0) = x_minus(2);
  qdot_e(1) = x_minus(3);
  Matrix relabel = Matrix::Identity(4, 4);
  relabel.topLeftCorner<2, 2>() << 0.0, 1.0, 1.0, 0.0;
  const Vector sol = rigid_impact(d_e, j_sw, qdot_e, relabel);
  Vector out(4);
  out << x_minus(1), x_minus(0), sol(0), sol(1);
  return out;
}

HybridSystemModel compass_gait(const CompassGaitParams& p) {
  p.validate();
  HybridSystemModel sys;
  sys.dim = 4;
  sys.name = "compass_gait";
  sys.vector_field = [p](const Vector& x) {
    const Vector q = x.head(2);
    const Vector qd = x.tail(2);
    const Matrix d = compass_mass_matrix(p, q);
    const Vector bias = compass_bias(p, q, qd);
    Vector f(4);
    f.head(2) = qd;
    f.tail(2) = d.llt().solve(-bias);
    return f;
  };
  // Swing-foot clearance above the slope line through the stance foot:
  // l * (cos(q1 - slope) - cos(q2 - slope)).
  sys.guard = [l = p.length, phi = p.slope](const Vector& x) {
    return l * (std::cos(x(0) - phi) - std::cos(x(1) - phi));
  };
  sys.guard_gradient = [l = p.length, phi = p.slope](const Vector& x) {
    Vector grad = Vector::Zero(4);
    grad(0) = -l * std::sin(x(0) - phi);
    grad(1) = l * std::sin(x(1) - phi);
    return grad;
  };
  sys.reset = [p](const Vector& x) { return compass_impact(p, x); };
  // Arm only once the swing foot is well ahead of the stance foot along
  // the slope; masks the mid-swing scuffing crossing.
  sys.guard_armed = [l = p.length, phi = p.slope](const Vector& x) {
    const double along =
        l * ((std::sin(x(0)) - std::sin(x(1))) * std::cos(phi) -
             (std::cos(x(0)) - std::cos(x(1))) * std::sin(phi));
    return along > 0.1 * l;
  };
  sys.guard_min = -0.03;
  sys.guard_max = 0.03;
  sys.state_scale = Vector::Ones(4);
  sys.state_names = {"q_stance", "q_swing", "qd_stance", "qd_swing"};
  sys.params = {{"m", p.m},           {"m_h", p.m_h}, {"a", p.a}, {"b", p.b},
                {"length", p.length}, {"g", p.g},     {"slope", p.slope}};
  return sys;
}

Vector rigid_impact(const Matrix& D, const Matrix& J_h,
                    const Vector& qdot_minus, const Matrix& R) {
  const auto n = D.rows();
  if (D.cols() != n || qdot_minus.size() != n || R.rows() != n ||
      R.cols() != n) {
    throw DegenerateConfig("impact solve dimensions disagree");
  }
  if (J_h.rows() == 0) return R * qdot_minus;
  if (J_h.cols() != n) {
    throw DegenerateConfig("constraint Jacobian has wrong column count");
  }
  Eigen::LLT<Matrix> llt(D);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("inertia matrix must be positive definite");
  }
  const Matrix dinv_jt = llt.solve(J_h.transpose());
  const Matrix contact = J_h * dinv_jt;
  Eigen::FullPivLU<Matrix> lu(contact);
  if (!lu.isInvertible()) {
    throw SingularContact("contact block J D^-1 J' is singular");
  }
  const Vector lambda = lu.solve(J_h * qdot_minus);
  return R * (qdot_minus - dinv_jt * lambda);
}

}  // namespace deltacert
