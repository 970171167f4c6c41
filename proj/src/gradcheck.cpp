#include "afda/gradcheck.hpp"

#include <cmath>
#include <sstream>

namespace afda {

namespace {

double eval_loss(const TapeLossBuilder& build, const std::vector<Tensor>& params) {
  Tape tape;
  std::vector<int> ids;
  int root = build(tape, params, ids);
  return tape.val(root)[0];
}

std::string coord_name(std::size_t param, std::size_t i) {
  std::ostringstream os;
  os << "param " << param << ", coord " << i;
  return os.str();
}

}  // namespace

FiniteDiffReport finite_diff_check(const TapeLossBuilder& build,
                                   std::vector<Tensor> params, double h, double tol) {
  FiniteDiffReport report;

  std::vector<Tensor> analytic;
  {
    Tape tape;
    std::vector<int> ids;
    int root = build(tape, params, ids);
    GradStore grads = tape.backward(root, ids);
    for (int id : ids) analytic.push_back(grads.grad(id));
  }

  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::size_t i = 0; i < params[p].size(); ++i) {
      double orig = params[p][i];
      params[p][i] = orig + h;
      double up;
      try {
        up = eval_loss(build, params);
      } catch (const std::exception& e) {
        params[p][i] = orig;
        report.pass = false;
        report.worst_location = coord_name(p, i) + " (+h): " + e.what();
        return report;
      }
      params[p][i] = orig - h;
      double down;
      try {
        down = eval_loss(build, params);
      } catch (const std::exception& e) {
        params[p][i] = orig;
        report.pass = false;
        report.worst_location = coord_name(p, i) + " (-h): " + e.what();
        return report;
      }
      params[p][i] = orig;

      if (!std::isfinite(up) || !std::isfinite(down)) {
        report.pass = false;
        report.worst_location = coord_name(p, i) + ": non-finite loss at perturbed point";
        return report;
      }

      double numeric = (up - down) / (2.0 * h);
      double a = analytic[p][i];
      double rel = std::fabs(a - numeric) / std::max({std::fabs(a), std::fabs(numeric), 1e-6});
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_location = coord_name(p, i);
      }
    }
  }

  report.pass = report.max_rel_err <= tol;
  return report;
}

}  // namespace afda
