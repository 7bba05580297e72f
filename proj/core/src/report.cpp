#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "binary_io.hpp"
#include "diststn/harness.hpp"
#include "diststn/nn.hpp"

namespace diststn {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

double mean_abs_diff(const Tensor& a, const Tensor& b) {
  Tape off(false);
  return mae_loss(off, a, b).item();
}

}  // namespace

std::string metrics_csv(const TrainResult& result) {
  std::ostringstream os;
  os << "epoch,classification,cross_reconstruction,self_reconstruction_i,self_reconstruction_j,total,val_accuracy\n";
  for (const auto& e : result.epochs) {
    os << e.epoch << ',' << fmt(e.classification) << ',' << fmt(e.cross_reconstruction) << ','
       << fmt(e.self_reconstruction_i) << ',' << fmt(e.self_reconstruction_j) << ',' << fmt(e.total) << ','
       << fmt(e.val_accuracy) << '\n';
  }
  os << "best," << result.best_epoch << ",,,,," << fmt(result.best_val_accuracy) << '\n';
  return os.str();
}

std::string timing_csv(const TrainResult& result) {
  std::ostringstream os;
  os << "epoch,wall_seconds\n";
  for (const auto& e : result.epochs) os << e.epoch << ',' << fmt(e.wall_seconds) << '\n';
  return os.str();
}

std::vector<std::uint8_t> encode_pgm16(std::span<const double> pixels, std::size_t width, std::size_t height) {
  const std::string header = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n65535\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + 2 * pixels.size());
  for (double v : pixels) {
    const auto q = static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0, 1.0) * 65535.0));
    out.push_back(static_cast<std::uint8_t>(q >> 8));
    out.push_back(static_cast<std::uint8_t>(q & 0xff));
  }
  return out;
}

double ReconstructionSummary::mean_self_vs_cross() const {
  double s = 0.0;
  for (const auto& r : rows) s += r.mae_self_vs_cross;
  return rows.empty() ? 0.0 : s / static_cast<double>(rows.size());
}

double ReconstructionSummary::mean_inputs() const {
  double s = 0.0;
  for (const auto& r : rows) s += r.mae_inputs;
  return rows.empty() ? 0.0 : s / static_cast<double>(rows.size());
}

ReconstructionSummary reconstruction_report(const DistStnModel& model, std::span<const std::pair<Tensor, Tensor>> pairs,
                                            const std::filesystem::path& out_dir) {
  ReconstructionSummary summary;
  const std::size_t s = model.config().image_size;
  std::ostringstream table;
  table << "pair,mae_self_vs_cross,mae_inputs,ratio\n";
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto& [x1, x2] = pairs[k];
    CrossReconstruction rec = cross_reconstruct(model, x1, x2);
    ReconstructionRow row{mean_abs_diff(rec.self, rec.cross), mean_abs_diff(x1, x2)};
    summary.rows.push_back(row);
    table << k << ',' << fmt(row.mae_self_vs_cross) << ',' << fmt(row.mae_inputs) << ','
          << fmt(row.mae_inputs > 0.0 ? row.mae_self_vs_cross / row.mae_inputs : 0.0) << '\n';
    if (out_dir.empty()) continue;

    // Tiles stacked top to bottom: x_1, x_2, x_hat_1, x_tilde_1.
    std::vector<double> grid;
    grid.reserve(4 * s * s);
    for (const Tensor* t : std::initializer_list<const Tensor*>{&x1, &x2, &rec.self, &rec.cross}) grid.insert(grid.end(), t->data().begin(), t->data().end());
    const auto [lo, hi] = std::minmax_element(grid.begin(), grid.end());
    const double low = *lo;
    const double range = *hi - *lo;
    for (double& v : grid) v = range > 0.0 ? (v - low) / range : 0.0;
    char name[32];
    std::snprintf(name, sizeof name, "pair_%03zu.pgm", k);
    const auto path = out_dir / name;
    detail::write_file(path, encode_pgm16(grid, s, 4 * s));
    summary.files.push_back(path);
  }
  if (!out_dir.empty()) {
    table << "mean," << fmt(summary.mean_self_vs_cross()) << ',' << fmt(summary.mean_inputs()) << ','
          << fmt(summary.mean_inputs() > 0.0 ? summary.mean_self_vs_cross() / summary.mean_inputs() : 0.0) << '\n';
    const std::string text = table.str();
    detail::write_file(out_dir / "summary.csv", std::vector<std::uint8_t>(text.begin(), text.end()));
  }
  return summary;
}

}  // namespace diststn
