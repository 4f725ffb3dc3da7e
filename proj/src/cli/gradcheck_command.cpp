#include <cstdio>

#include "abcd/cli.hpp"
#include "abcd/gradcheck.hpp"

namespace abcd::cli {
namespace {

void print_row(std::ostream& out, const char* mode,
               const GradcheckModeResult& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-15s %12.3e %11.3e %11.3e %11.3e %11.3e\n",
                mode, r.max_rel_error, r.worst_per_coord[0],
                r.worst_per_coord[1], r.worst_per_coord[2],
                r.worst_per_coord[3]);
  out << buf;
}

}  // namespace

int cmd_gradcheck(const RunConfig& config, std::ostream& out, std::ostream&) {
  const auto pairs = random_box_pairs(config.pairs, config.seed);
  const GradcheckReport report =
      run_ciou_gradcheck(pairs, kGradcheckStep, config.corrupt_gradient);
  char header[256];
  std::snprintf(header, sizeof(header),
                "ciou gradient check: %zu pairs, seed %llu, step %.0e, "
                "tolerance %.0e\n",
                report.pairs, static_cast<unsigned long long>(config.seed),
                report.step, kGradcheckTolerance);
  out << header;
  char cols[256];
  std::snprintf(cols, sizeof(cols), "%-15s %12s %11s %11s %11s %11s\n", "mode",
                "max_rel_err", "xmin", "ymin", "xmax", "ymax");
  out << cols;
  print_row(out, "alpha-constant", report.alpha_constant);
  print_row(out, "alpha-full", report.alpha_full);
  char tail[64];
  std::snprintf(tail, sizeof(tail), "elapsed_s %.3f\n", report.elapsed_s);
  out << tail;
  const bool ok = report.passed();
  out << "result " << (ok ? "PASS" : "FAIL") << '\n';
  return ok ? kExitOk : kExitFailure;
}

}  // namespace abcd::cli
