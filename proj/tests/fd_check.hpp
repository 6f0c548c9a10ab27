#pragma once

// Central finite-difference gradient oracle, independent of the tape's
// backward pass: it only re-evaluates the loss under coefficient
// perturbations. Call after backward() has left analytic gradients in the
// parameter set.

#include <functional>
#include <map>
#include <string>

#include "rolelab/autodiff.hpp"

namespace testutil {

struct FdReport {
  double max_rel_err = 0.0;
  std::string worst_tensor;
  int worst_index = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  long checked = 0;
};

inline FdReport finite_difference_check(rolelab::ad::ParameterSet& params,
                                        const std::function<double()>& loss_fn, double h = 1e-5,
                                        double denom_floor = 1e-6) {
  FdReport report;
  std::map<std::string, rolelab::Mat> analytic;
  for (auto& t : params) analytic[t->name] = t->grad;
  for (auto& t : params) {
    rolelab::Mat& v = t->value;
    const rolelab::Mat& a = analytic[t->name];
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      double orig = v.data()[i];
      v.data()[i] = orig + h;
      double up = loss_fn();
      v.data()[i] = orig - h;
      double down = loss_fn();
      v.data()[i] = orig;
      double numeric = (up - down) / (2.0 * h);
      double analytic_g = a.data()[i];
      double rel = std::abs(analytic_g - numeric) /
                   std::max({std::abs(analytic_g), std::abs(numeric), denom_floor});
      ++report.checked;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_tensor = t->name;
        report.worst_index = static_cast<int>(i);
        report.worst_analytic = analytic_g;
        report.worst_numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace testutil
