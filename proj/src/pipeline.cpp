#include "lesionpipe/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iomanip>
#include <set>
#include <thread>

#include "lesionpipe/png_io.hpp"

namespace lesionpipe {

namespace {

// Chunked parallel map over [0, n); each index writes only its own slot, so
// results are independent of the thread count.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  jobs = std::max(1, std::min(jobs, n));
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(jobs);
  for (int t = 0; t < jobs; ++t)
    pool.emplace_back([&, t] {
      try {
        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);
}

}  // namespace

GrayImage prepare_image(const GrayImage& gray, int image_size, int border) {
  return add_border(resize_bilinear(gray, image_size, image_size), border);
}

BinaryMask prepare_mask(const BinaryMask& mask, int image_size) {
  return resize_nearest(mask, image_size, image_size);
}

std::vector<std::string> plan_stages(const ScenarioConfig& cfg) {
  std::vector<std::string> stages{"prepare"};
  if (cfg.preprocess_enabled()) stages.push_back("preprocess");
  if (cfg.lbp_enabled()) stages.push_back("transform:lbp");
  if (cfg.wavelet_levels() > 0)
    stages.push_back("transform:wavelet" + std::to_string(cfg.wavelet_levels()));
  stages.push_back("augment");
  stages.push_back("train");
  stages.push_back("predict");
  stages.push_back("threshold");
  if (cfg.postprocess_enabled()) stages.push_back("select-object");
  stages.push_back("evaluate");
  return stages;
}

namespace {

const char* kAugSuffix[6] = {"", ":r90", ":r180", ":r270", ":mx", ":my"};

}  // namespace

std::vector<PreparedSample> prepare_dataset(const DatasetManifest& manifest,
                                            const ScenarioConfig& cfg) {
  const int n = int(manifest.entries.size());
  std::vector<std::vector<PreparedSample>> per_entry(n);

  parallel_for(n, cfg.jobs, [&](int i) {
    const ManifestEntry& entry = manifest.entries[i];
    GrayImage gray;
    BinaryMask mask;
    try {
      gray = read_png_gray(entry.image);
      mask = read_png_mask(entry.mask);
    } catch (const DataError& e) {
      throw DataError("stage prepare, image '" + entry.id + "': " + e.what());
    }
    GrayImage prepared = prepare_image(gray, cfg.image_size, cfg.border);
    if (cfg.preprocess_enabled()) prepared = preprocess_chain(prepared);
    const FeatureStack stack = build_input_stack(prepared, cfg);
    const BinaryMask target = prepare_mask(mask, cfg.image_size);

    auto& samples = per_entry[i];
    samples.reserve(6);
    for (int a = 0; a < 6; ++a) {
      const GeomOp op = kAugmentOps[a];
      samples.push_back({entry.id + kAugSuffix[a], apply_geom(op, stack),
                         apply_geom(op, target), entry.test});
    }
  });

  std::vector<PreparedSample> out;
  out.reserve(size_t(n) * 6);
  for (auto& group : per_entry)
    for (auto& s : group) out.push_back(std::move(s));
  return out;
}

namespace {

void fill_batch(const std::vector<const PreparedSample*>& set,
                const std::vector<int>& picks, Tensor4<float>& x,
                Tensor4<uint8_t>& target) {
  const int b = int(picks.size());
  const auto& first = *set[picks[0]];
  x = Tensor4<float>(b, first.stack.channels, first.stack.height,
                     first.stack.width);
  target = Tensor4<uint8_t>(b, 1, first.target.height, first.target.width);
  for (int i = 0; i < b; ++i) {
    const PreparedSample& s = *set[picks[i]];
    std::copy(s.stack.data.begin(), s.stack.data.end(), x.plane(i, 0));
    std::copy(s.target.data.begin(), s.target.data.end(), target.plane(i, 0));
  }
}

// Mean Jaccard of the thresholded lesion channel against the batch targets.
double batch_jaccard(const Tensor4<float>& probs, const Tensor4<uint8_t>& target,
                     int crop) {
  const int ch = target.h, cw = target.w;
  double total = 0;
  for (int in = 0; in < probs.n; ++in) {
    const float* p1 = probs.plane(in, 1);
    const uint8_t* t = target.plane(in, 0);
    int64_t inter = 0, uni = 0;
    for (int y = 0; y < ch; ++y)
      for (int x = 0; x < cw; ++x) {
        const int pred = p1[size_t(y + crop) * probs.w + (x + crop)] > 0.5f;
        const int truth = t[size_t(y) * cw + x];
        inter += pred & truth;
        uni += pred | truth;
      }
    total += uni == 0 ? 1.0 : double(inter) / double(uni);
  }
  return total / probs.n;
}

}  // namespace

Raster predict_prob(const UNetParams<float>& params, const FeatureStack& stack,
                    int border) {
  Tensor4<float> x(1, stack.channels, stack.height, stack.width);
  std::copy(stack.data.begin(), stack.data.end(), x.v.begin());
  const Tensor4<float> probs = unet_predict(params, x);
  Raster prob(stack.width - 2 * border, stack.height - 2 * border);
  const float* p1 = probs.plane(0, 1);
  for (int y = 0; y < prob.height; ++y)
    for (int x2 = 0; x2 < prob.width; ++x2)
      prob.at(y, x2) = double(p1[size_t(y + border) * probs.w + (x2 + border)]);
  return prob;
}

BinaryMask finalize_mask(const Raster& prob, const ScenarioConfig& cfg, double tau) {
  return postprocess_mask(prob, tau, cfg.postprocess_enabled());
}

TrainOutput train_network(const std::vector<const PreparedSample*>& train_set,
                          const ScenarioConfig& cfg) {
  if (train_set.empty()) throw DataError("train: empty dataset");
  const TrainConfig& tc = cfg.train;
  tc.validate();

  TrainOutput out{init_params<float>(cfg.net, cfg.seed),
                  {zeros_like<float>(init_params<float>(cfg.net, 0)),
                   zeros_like<float>(init_params<float>(cfg.net, 0)),
                   0},
                  {},
                  0.0};
  UNetParams<float> grads = zeros_like(out.params);

  Rng sampler(derive_seed(cfg.seed, 0x7Eu));
  const int n = int(train_set.size());
  std::set<int> last_epoch_picks;

  UNetCache<float> cache;
  Tensor4<float> x;
  Tensor4<uint8_t> target;
  Tensor4<float> dlogits;

  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    for (int iter = 0; iter < tc.iterations_per_epoch; ++iter) {
      std::vector<int> picks(tc.batch_size);
      for (int& p : picks) p = int(sampler.uniform_int(uint32_t(n)));
      if (epoch == tc.epochs - 1) last_epoch_picks.insert(picks.begin(), picks.end());

      fill_batch(train_set, picks, x, target);
      unet_forward(out.params, x, /*train=*/true, cache);
      const double loss = double(net::xent_loss(cache.probs, target, cfg.border));
      const double bj = batch_jaccard(cache.probs, target, cfg.border);

      net::xent_grad(cache.probs, target, cfg.border, dlogits);
      unet_backward(out.params, cache, dlogits, grads);
      adam_step(out.params, grads, out.adam.m, out.adam.v, tc);
      apply_running_stats(out.params, cache);

      out.history.push_back({epoch, iter, loss, bj});
    }
  }
  out.adam.step = out.params.step;

  // Training Jaccard: infer-mode masks for the last epoch's sampled images.
  double total = 0;
  for (int idx : last_epoch_picks) {
    const PreparedSample& s = *train_set[idx];
    const Raster prob = predict_prob(out.params, s.stack, cfg.border);
    total += jaccard(finalize_mask(prob, cfg), s.target);
  }
  out.final_train_jaccard = total / double(last_epoch_picks.size());
  return out;
}

void write_history_csv(const std::filesystem::path& path,
                       const std::vector<TrainHistoryRow>& history) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "epoch,iteration,loss,train_jaccard\n";
  out << std::setprecision(9) << std::fixed;
  for (const auto& row : history)
    out << row.epoch << ',' << row.iteration << ',' << row.loss << ','
        << row.batch_jaccard << '\n';
}

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out_dir);

  DatasetManifest manifest;
  if (cfg.data_root.empty()) {
    const auto synth_root = cfg.out_dir / "synth_data";
    std::filesystem::remove_all(synth_root);
    manifest = synth_dataset(synth_root, cfg.synth_train + cfg.synth_test, cfg.seed,
                             SynthParams{.size = cfg.synth_size}, cfg.synth_test);
  } else {
    manifest = ingest(cfg.data_root);
  }

  const std::vector<PreparedSample> samples = prepare_dataset(manifest, cfg);
  std::vector<const PreparedSample*> train_set, test_set;
  for (const auto& s : samples)
    (s.test ? test_set : train_set).push_back(&s);
  if (train_set.empty()) throw DataError("run_scenario: no training samples");
  if (test_set.empty()) throw DataError("run_scenario: no test samples");

  TrainOutput trained = train_network(train_set, cfg);

  ScenarioResult result;
  result.weights_path = cfg.out_dir / "weights.lpwt";
  result.history_path = cfg.out_dir / "history.csv";
  result.report_path = cfg.out_dir / "report.csv";
  result.masks_dir = cfg.out_dir / "masks";
  std::filesystem::create_directories(result.masks_dir);

  save_weights(result.weights_path, trained.params, &trained.adam);
  write_history_csv(result.history_path, trained.history);

  std::vector<BinaryMask> predictions(test_set.size());
  std::vector<BinaryMask> truths(test_set.size());
  std::vector<std::string> ids(test_set.size());
  parallel_for(int(test_set.size()), cfg.jobs, [&](int i) {
    const PreparedSample& s = *test_set[i];
    const Raster prob = predict_prob(trained.params, s.stack, cfg.border);
    predictions[i] = finalize_mask(prob, cfg);
    truths[i] = s.target;
    ids[i] = s.id;
  });
  for (size_t i = 0; i < predictions.size(); ++i) {
    std::string name = ids[i];
    std::replace(name.begin(), name.end(), ':', '_');
    write_png(result.masks_dir / (name + ".png"), predictions[i]);
  }

  result.report = evaluate_batches(predictions, truths, cfg.eval_batch_size,
                                   cfg.eval_batches, cfg.seed);
  result.report.scenario = to_string(cfg.scenario);
  result.report.train_jaccard = trained.final_train_jaccard;
  write_report_csv(result.report_path, result.report, ids);
  return result;
}

std::string compare_scenarios(const std::vector<ScenarioConfig>& cfgs) {
  if (cfgs.size() < 2)
    throw ConfigError("compare_scenarios: need at least two configs");
  for (const auto& cfg : cfgs) {
    if (cfg.seed != cfgs[0].seed)
      throw ConfigError("compare_scenarios: configs must share the seed");
    if (cfg.data_root != cfgs[0].data_root)
      throw ConfigError("compare_scenarios: configs must share the dataset");
  }
  std::vector<EvalReport> reports;
  for (ScenarioConfig cfg : cfgs) {
    cfg.out_dir = cfgs[0].out_dir / ("scenario_" + to_string(cfg.scenario));
    cfg.net.in_channels = cfg.channels();
    reports.push_back(run_scenario(cfg).report);
  }
  return scenario_table(reports);
}

RgbImage contour_overlay(const GrayImage& img, const BinaryMask& mask) {
  RgbImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      uint8_t* px = out.px(y, x);
      const uint8_t g = img.at(y, x);
      bool contour = false;
      if (mask.at(y, x)) {
        contour = y == 0 || x == 0 || y == img.height - 1 || x == img.width - 1 ||
                  !mask.at(y - 1, x) || !mask.at(y + 1, x) || !mask.at(y, x - 1) ||
                  !mask.at(y, x + 1);
      }
      if (contour) {
        px[0] = 255;
        px[1] = 0;
        px[2] = 0;
      } else {
        px[0] = px[1] = px[2] = g;
      }
    }
  return out;
}

}  // namespace lesionpipe
