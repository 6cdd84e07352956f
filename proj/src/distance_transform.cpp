#include "thinslice/distance_transform.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "thinslice/errors.hpp"

namespace thinslice {

namespace {

void check_weights(double w_quad, double w_lin) {
  if (!(w_quad >= kMinQuadratic) || !std::isfinite(w_quad) ||
      !std::isfinite(w_lin)) {
    throw ArgumentError("distance transform needs a finite quadratic weight >= " +
                        std::to_string(kMinQuadratic) + ", got " +
                        std::to_string(w_quad));
  }
}

/// Reusable buffers for the envelope pass.
struct Envelope {
  std::vector<double> offset;    // c_j = g_j - a j^2 - b j
  std::vector<int> vertex;       // envelope members, increasing j
  std::vector<double> boundary;  // member m wins on (boundary[m], boundary[m+1]]

  void resize(std::size_t n) {
    offset.resize(n);
    vertex.resize(n);
    boundary.resize(n + 1);
  }
};

// Strided 1D pass. Every candidate j is a line c_j + 2 a j i in i (the common
// -a i^2 + b i term drops out), so the maximum is an upper envelope of lines
// with increasing slopes. At an exact crossing the smaller j keeps the pixel.
void envelope_pass(const double* in, std::ptrdiff_t in_stride, int n, double a,
                   double b, double* out, std::ptrdiff_t out_stride, int* arg,
                   Envelope& env) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  env.resize(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    env.offset[j] = in[j * in_stride] - a * j * j - b * j;
  }
  int k = 0;
  env.vertex[0] = 0;
  env.boundary[0] = -kInf;
  for (int q = 1; q < n; ++q) {
    double s = 0.0;
    while (true) {
      const int v = env.vertex[k];
      s = (env.offset[v] - env.offset[q]) / (2.0 * a * (q - v));
      if (s <= env.boundary[k]) {
        --k;
        continue;
      }
      break;
    }
    ++k;
    env.vertex[k] = q;
    env.boundary[k] = s;
  }
  env.boundary[k + 1] = kInf;
  int m = 0;
  for (int i = 0; i < n; ++i) {
    while (env.boundary[m + 1] < i) ++m;
    const int j = env.vertex[m];
    const double d = j - i;
    out[i * out_stride] = in[j * in_stride] - a * d * d - b * d;
    arg[i] = j;
  }
}

}  // namespace

Dt1dResult gdt_1d(std::span<const double> score, double w_quad, double w_lin) {
  check_weights(w_quad, w_lin);
  if (score.empty()) throw ArgumentError("gdt_1d: empty input");
  const int n = static_cast<int>(score.size());
  Dt1dResult r{std::vector<double>(score.size()), std::vector<int>(score.size())};
  Envelope env;
  envelope_pass(score.data(), 1, n, w_quad, w_lin, r.values.data(), 1,
                r.argmax.data(), env);
  return r;
}

Dt1dResult brute_force_1d(std::span<const double> score, double w_quad,
                          double w_lin) {
  check_weights(w_quad, w_lin);
  if (score.empty()) throw ArgumentError("brute_force_1d: empty input");
  const int n = static_cast<int>(score.size());
  Dt1dResult r{std::vector<double>(score.size()), std::vector<int>(score.size())};
  for (int i = 0; i < n; ++i) {
    int best = -1;
    double best_value = 0.0;
    for (int j = 0; j < n; ++j) {
      const double d = j - i;
      const double v = score[j] - w_quad * d * d - w_lin * d;
      if (best < 0 || v > best_value) {
        best = j;
        best_value = v;
      }
    }
    r.values[i] = best_value;
    r.argmax[i] = best;
  }
  return r;
}

DtResult gdt_2d(const Heatmap& score, const Spring& spring) {
  if (score.empty()) throw ArgumentError("gdt_2d: empty map");
  check_weights(spring.x_quad, spring.x_lin);
  check_weights(spring.y_quad, spring.y_lin);
  const int h = score.height();
  const int w = score.width();
  const auto src = score.values();

  Envelope env;
  std::vector<double> rows(score.size());
  std::vector<int> row_arg(score.size());
  for (int y = 0; y < h; ++y) {
    const std::size_t base = static_cast<std::size_t>(y) * w;
    envelope_pass(src.data() + base, 1, w, spring.x_quad, spring.x_lin,
                  rows.data() + base, 1, row_arg.data() + base, env);
  }
  DtResult r{Heatmap(h, w), std::vector<int>(score.size())};
  std::vector<double> col(static_cast<std::size_t>(h));
  std::vector<int> col_arg(static_cast<std::size_t>(h));
  for (int x = 0; x < w; ++x) {
    envelope_pass(rows.data() + x, w, h, spring.y_quad, spring.y_lin,
                  col.data(), 1, col_arg.data(), env);
    for (int y = 0; y < h; ++y) {
      const int sy = col_arg[y];
      const int sx = row_arg[static_cast<std::size_t>(sy) * w + x];
      const std::size_t i = r.values.index(x, y);
      r.argmax[i] = sy * w + sx;
      r.values[i] = score.at(sx, sy) + spring.psi(sx - x, sy - y);
    }
  }
  return r;
}

void dt_backward_accumulate(const DtResult& result, const Heatmap& upstream,
                            Heatmap& grad_score,
                            std::array<double, 4>& grad_spring) {
  if (!upstream.same_shape(result.values) ||
      !grad_score.same_shape(result.values)) {
    throw ArgumentError("dt_backward: gradient geometry does not match result");
  }
  const int w = result.values.width();
  for (int y = 0; y < result.values.height(); ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = result.values.index(x, y);
      const double g = upstream[i];
      if (g == 0.0) continue;
      const int src = result.argmax[i];
      grad_score[static_cast<std::size_t>(src)] += g;
      const auto d = psi_gradient(src % w - x, src / w - y);
      for (int c = 0; c < 4; ++c) grad_spring[c] += g * d[c];
    }
  }
}

DtGradient dt_backward(const DtResult& result, const Heatmap& upstream) {
  DtGradient g{Heatmap(result.values.height(), result.values.width()), {}};
  dt_backward_accumulate(result, upstream, g.score, g.spring);
  return g;
}

}  // namespace thinslice
