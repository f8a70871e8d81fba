#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lesionpipe/image.hpp"

namespace lesionpipe {

// |A ∩ B| / |A ∪ B|; both masks empty -> 1.0 (perfect agreement on absence).
double jaccard(const BinaryMask& a, const BinaryMask& b);

struct EvalReport {
  std::string scenario;

  struct Entry {
    int batch_id = 0;
    int pair_index = 0;
    double score = 0;
  };
  std::vector<Entry> entries;       // one row per sampled (batch, image)
  std::vector<double> batch_means;  // per-batch mean Jaccard
  double mu = 0;                    // mean of batch means
  double sigma = 0;                 // population std over batch means
  double train_jaccard = -1;        // < 0 when unknown
};

// Draws n_batches batches of batch_size distinct pairs (independent across
// batches) with the seeded generator and aggregates per-batch mean Jaccard.
EvalReport evaluate_batches(const std::vector<BinaryMask>& predictions,
                            const std::vector<BinaryMask>& truths, int batch_size,
                            int n_batches, uint64_t seed);

// Table-1 shaped comparison: one column per report, rows Training /
// Testing mu / Testing sigma, percent with two decimals.
std::string scenario_table(const std::vector<EvalReport>& reports);

// CSV rows image_id,jaccard,batch_id plus mu/sigma footer rows; ids index
// into the evaluated pair list.
void write_report_csv(const std::filesystem::path& path, const EvalReport& report,
                      const std::vector<std::string>& pair_ids);

}  // namespace lesionpipe
