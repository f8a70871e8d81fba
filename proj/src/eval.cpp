#include "lesionpipe/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "lesionpipe/rng.hpp"

namespace lesionpipe {

double jaccard(const BinaryMask& a, const BinaryMask& b) {
  if (a.width != b.width || a.height != b.height)
    throw DataError("jaccard: mask dimension mismatch");
  int64_t inter = 0, uni = 0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    inter += a.data[i] & b.data[i];
    uni += a.data[i] | b.data[i];
  }
  return uni == 0 ? 1.0 : double(inter) / double(uni);
}

EvalReport evaluate_batches(const std::vector<BinaryMask>& predictions,
                            const std::vector<BinaryMask>& truths, int batch_size,
                            int n_batches, uint64_t seed) {
  if (predictions.size() != truths.size())
    throw DataError("evaluate_batches: prediction/truth counts differ");
  if (batch_size < 1 || n_batches < 1)
    throw ConfigError("evaluate_batches: batch_size and n_batches must be >= 1");
  const int n = int(predictions.size());
  if (n < batch_size)
    throw DataError("evaluate_batches: fewer pairs than batch_size");

  // Per-pair scores once, sampling reuses them.
  std::vector<double> scores(n);
  for (int i = 0; i < n; ++i) scores[i] = jaccard(predictions[i], truths[i]);

  EvalReport report;
  Rng rng(derive_seed(seed, 0xEBu));
  std::vector<int> indices(n);
  for (int b = 0; b < n_batches; ++b) {
    std::iota(indices.begin(), indices.end(), 0);
    double batch_sum = 0;
    for (int k = 0; k < batch_size; ++k) {
      // Partial Fisher-Yates: distinct picks within the batch.
      const int j = k + int(rng.uniform_int(uint32_t(n - k)));
      std::swap(indices[k], indices[j]);
      const int pick = indices[k];
      report.entries.push_back({b, pick, scores[pick]});
      batch_sum += scores[pick];
    }
    report.batch_means.push_back(batch_sum / batch_size);
  }

  report.mu = std::accumulate(report.batch_means.begin(), report.batch_means.end(),
                              0.0) /
              double(n_batches);
  double var = 0;
  for (double m : report.batch_means) var += (m - report.mu) * (m - report.mu);
  report.sigma = std::sqrt(var / double(n_batches));
  return report;
}

namespace {

std::string pct(double value) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(2) << value * 100.0;
  return ss.str();
}

}  // namespace

std::string scenario_table(const std::vector<EvalReport>& reports) {
  if (reports.empty()) throw DataError("scenario_table: no reports");
  std::ostringstream out;
  const int w = 12;
  out << std::left << std::setw(w) << "";
  for (const auto& r : reports) out << std::right << std::setw(w) << r.scenario;
  out << "\n";
  out << std::left << std::setw(w) << "Training";
  for (const auto& r : reports)
    out << std::right << std::setw(w)
        << (r.train_jaccard < 0 ? std::string("-") : pct(r.train_jaccard));
  out << "\n";
  out << std::left << std::setw(w) << "Testing mu";
  for (const auto& r : reports) out << std::right << std::setw(w) << pct(r.mu);
  out << "\n";
  out << std::left << std::setw(w) << "Testing sigma";
  for (const auto& r : reports) out << std::right << std::setw(w) << pct(r.sigma);
  out << "\n";
  return out.str();
}

void write_report_csv(const std::filesystem::path& path, const EvalReport& report,
                      const std::vector<std::string>& pair_ids) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "# jaccard evaluation; sigma is the population standard deviation over "
         "batch means\n";
  out << "image_id,jaccard,batch_id\n";
  out << std::setprecision(9) << std::fixed;
  for (const auto& e : report.entries) {
    const std::string id = e.pair_index < int(pair_ids.size())
                               ? pair_ids[e.pair_index]
                               : std::to_string(e.pair_index);
    out << id << ',' << e.score << ',' << e.batch_id << '\n';
  }
  out << "mu," << report.mu << ",\n";
  out << "sigma," << report.sigma << ",\n";
}

}  // namespace lesionpipe
