#include "levypot/drift.hpp"

#include <algorithm>

namespace levypot {

namespace {

double fd_step(const Point& x) { return 1e-5 * (1.0 + x.norm()); }

// Builds both the Point and Jet evaluations from one generic kernel.
template <class Kernel>
void bind(DriftField& f, Kernel kernel) {
  const int d = f.dim;
  f.b = [kernel, d](const Point& x) {
    std::vector<double> xs(x.data(), x.data() + d);
    const std::vector<double> ys = kernel(xs);
    Point y(d);
    for (int i = 0; i < d; ++i) y[i] = ys[i];
    return y;
  };
  f.b_jet = [kernel](const std::vector<Jet>& x) { return kernel(x); };
}

void expect_params(const std::string& name, const std::vector<double>& p, std::size_t n) {
  if (p.size() != n)
    throw ConfigError("drift '" + name + "' expects " + std::to_string(n) + " parameters, got " +
                      std::to_string(p.size()));
}

}  // namespace

double DriftField::divergence(const Point& x) const {
  if (div_b) return div_b(x);
  const double h = fd_step(x);
  double acc = 0.0;
  for (int i = 0; i < dim; ++i) {
    Point xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    acc += (b(xp)[i] - b(xm)[i]) / (2.0 * h);
  }
  return acc;
}

Matrix DriftField::jacobian(const Point& x) const {
  Matrix J(dim, dim);
  if (b_jet) {
    std::vector<Jet> xs;
    for (int i = 0; i < dim; ++i) xs.push_back(Jet::variable(dim, 1, i, x[i]));
    const auto ys = b_jet(xs);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) {
        std::vector<int> e(dim, 0);
        e[j] = 1;
        J(i, j) = ys[i].derivative(e);
      }
    return J;
  }
  const double h = fd_step(x);
  for (int j = 0; j < dim; ++j) {
    Point xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    J.col(j) = (b(xp) - b(xm)) / (2.0 * h);
  }
  return J;
}

DriftField make_drift(const std::string& name, int dim, const std::vector<double>& params) {
  require_dim(dim);
  DriftField f;
  f.name = name;
  f.params = params;
  f.dim = dim;
  f.identically_zero = false;

  if (name == "zero") {
    expect_params(name, params, 0);
    f.identically_zero = true;
    bind(f, [dim](const auto& x) {
      using T = typename std::decay_t<decltype(x)>::value_type;
      return std::vector<T>(dim, x[0] * 0.0);
    });
    f.div_b = [](const Point&) { return 0.0; };
  } else if (name == "constant") {
    expect_params(name, params, static_cast<std::size_t>(dim));
    bind(f, [params](const auto& x) {
      using T = typename std::decay_t<decltype(x)>::value_type;
      std::vector<T> y;
      for (std::size_t i = 0; i < x.size(); ++i) y.push_back(x[i] * 0.0 + params[i]);
      return y;
    });
    f.div_b = [](const Point&) { return 0.0; };
    double s = 0.0;
    for (double c : params) s += c * c;
    f.sup_bound = std::sqrt(s);
    f.identically_zero = f.sup_bound == 0.0;
  } else if (name == "identity") {
    expect_params(name, params, 0);
    bind(f, [](const auto& x) { return x; });
    f.div_b = [dim](const Point&) { return static_cast<double>(dim); };
    f.lipschitz_bound = 1.0;
    f.sup_bound = kInf;  // bounded only on bounded domains
  } else if (name == "linear") {
    expect_params(name, params, static_cast<std::size_t>(dim * dim));
    bind(f, [params, dim](const auto& x) {
      using T = typename std::decay_t<decltype(x)>::value_type;
      std::vector<T> y;
      for (int i = 0; i < dim; ++i) {
        T acc = x[0] * 0.0;
        for (int j = 0; j < dim; ++j) acc = acc + x[j] * params[i * dim + j];
        y.push_back(acc);
      }
      return y;
    });
    double tr = 0.0;
    Matrix A(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) A(i, j) = params[i * dim + j];
    tr = A.trace();
    f.div_b = [tr](const Point&) { return tr; };
    f.lipschitz_bound = Eigen::JacobiSVD<Eigen::MatrixXd>(Eigen::MatrixXd(A)).singularValues()(0);
    f.sup_bound = kInf;
  } else if (name == "sine") {
    expect_params(name, params, 1);
    const double amp = params[0];
    bind(f, [amp](const auto& x) {
      using T = typename std::decay_t<decltype(x)>::value_type;
      std::vector<T> y;
      for (const auto& xi : x) {
        using std::sin;
        y.push_back(amp * sin(xi));
      }
      return y;
    });
    f.div_b = [amp](const Point& x) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < x.size(); ++i) s += amp * std::cos(x[i]);
      return s;
    };
    f.lipschitz_bound = std::abs(amp);
    f.sup_bound = std::abs(amp) * std::sqrt(static_cast<double>(dim));
  } else if (name == "sin_cos") {
    if (dim != 2) throw ConfigError("drift 'sin_cos' is two-dimensional");
    expect_params(name, params, 1);
    const double amp = params[0];
    bind(f, [amp](const auto& x) {
      using std::cos;
      using std::sin;
      using T = typename std::decay_t<decltype(x)>::value_type;
      return std::vector<T>{amp * sin(x[1]), amp * cos(x[0])};
    });
    f.div_b = [](const Point&) { return 0.0; };
    f.lipschitz_bound = std::abs(amp);
    f.sup_bound = std::abs(amp) * std::sqrt(2.0);
  } else if (name == "kolmogorov") {
    if (dim != 2) throw ConfigError("drift 'kolmogorov' is two-dimensional");
    expect_params(name, params, 0);
    bind(f, [](const auto& x) {
      using T = typename std::decay_t<decltype(x)>::value_type;
      return std::vector<T>{x[0] * 0.0, x[0]};
    });
    f.div_b = [](const Point&) { return 0.0; };
    f.lipschitz_bound = 1.0;
    f.sup_bound = kInf;
  } else if (name == "tanh_shear") {
    expect_params(name, params, 1);
    const double amp = params[0];
    bind(f, [amp](const auto& x) {
      using std::tanh;
      using T = typename std::decay_t<decltype(x)>::value_type;
      std::vector<T> y;
      const std::size_t d = x.size();
      for (std::size_t i = 0; i < d; ++i) y.push_back(amp * tanh(x[(i + 1) % d]));
      return y;
    });
    if (dim == 1) {
      f.div_b = [amp](const Point& x) {
        const double t = std::tanh(x[0]);
        return amp * (1.0 - t * t);
      };
    } else {
      f.div_b = [](const Point&) { return 0.0; };
    }
    f.lipschitz_bound = std::abs(amp);
    f.sup_bound = std::abs(amp) * std::sqrt(static_cast<double>(dim));
  } else {
    throw ConfigError("unknown drift '" + name + "'");
  }
  return f;
}

std::vector<std::string> builtin_drift_names() {
  return {"zero", "constant", "identity", "linear", "sine", "sin_cos", "kolmogorov", "tanh_shear"};
}

DriftField negated(const DriftField& drift) {
  DriftField f = drift;
  f.name = "neg(" + drift.name + ")";
  auto b = drift.b;
  f.b = [b](const Point& x) { return Point(-b(x)); };
  if (drift.b_jet) {
    auto bj = drift.b_jet;
    f.b_jet = [bj](const std::vector<Jet>& x) {
      auto y = bj(x);
      for (auto& v : y) v = -v;
      return y;
    };
  }
  if (drift.div_b) {
    auto dv = drift.div_b;
    f.div_b = [dv](const Point& x) { return -dv(x); };
  }
  return f;
}

bool check_drift_bounds(const DriftField& drift, const std::vector<Point>& samples, double slack) {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Point bi = drift(samples[i]);
    if (bi.norm() > drift.sup_bound * (1.0 + slack) + slack) return false;
    if (i > 0) {
      const Point bj = drift(samples[i - 1]);
      const double dx = (samples[i] - samples[i - 1]).norm();
      if ((bi - bj).norm() > drift.lipschitz_bound * dx * (1.0 + slack) + slack) return false;
    }
  }
  return true;
}

}  // namespace levypot
