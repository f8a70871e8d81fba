#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "lesionpipe/pipeline.hpp"
#include "lesionpipe/png_io.hpp"

namespace fs = std::filesystem;
using namespace lesionpipe;

namespace {

std::vector<fs::path> png_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError(dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".png")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  return files;
}

bool is_mask_name(const fs::path& p) {
  return p.stem().string().ends_with("_mask");
}

int cmd_prepare(const fs::path& in, const fs::path& out, int size, int border) {
  fs::create_directories(out);
  int count = 0;
  for (const auto& file : png_files(in)) {
    if (is_mask_name(file)) {
      write_png(out / file.filename(),
                prepare_mask(read_png_mask(file), size));
    } else {
      write_png(out / file.filename(),
                prepare_image(read_png_gray(file), size, border));
    }
    ++count;
  }
  if (count == 0) throw DataError("no PNG files in " + in.string());
  std::cout << "prepared " << count << " files -> " << out.string() << "\n";
  return 0;
}

int cmd_preprocess(const fs::path& in, const fs::path& out, double clip,
                   double vignette_threshold) {
  fs::create_directories(out);
  ContrastParams cp{clip};
  VignetteParams vp;
  vp.darkness_threshold = vignette_threshold;
  int count = 0;
  for (const auto& file : png_files(in)) {
    if (is_mask_name(file)) continue;
    PreprocessTrace trace;
    const GrayImage processed = preprocess_chain(read_png_gray(file), cp, vp, &trace);
    write_png(out / file.filename(), processed);

    nlohmann::json sidecar{
        {"image", file.stem().string()},
        {"contrast_clip_fraction", clip},
        {"edge_pixels", trace.edge_pixels},
        {"vignette_iterations", trace.vignette_iterations},
    };
    std::ofstream js(out / (file.stem().string() + ".json"));
    js << sidecar.dump(2) << "\n";
    ++count;
  }
  if (count == 0) throw DataError("no image PNGs in " + in.string());
  std::cout << "pre-processed " << count << " images -> " << out.string() << "\n";
  return 0;
}

int cmd_transform(const std::string& scenario, const fs::path& in,
                  const fs::path& out, const ScenarioConfig& base) {
  ScenarioConfig cfg = base;
  cfg.scenario = scenario_from_string(scenario);
  if (cfg.scenario != Scenario::C && cfg.scenario != Scenario::D)
    throw ConfigError("transform: scenario must be C or D");
  cfg.net.in_channels = cfg.channels();

  fs::create_directories(out);
  int count = 0;
  for (const auto& file : png_files(in)) {
    if (is_mask_name(file)) continue;
    const GrayImage img = read_png_gray(file);
    const FeatureStack stack = build_input_stack(img, cfg);
    write_feature_stack(out / (file.stem().string() + ".lpfs"), stack);
    for (int c = 0; c < stack.channels; ++c) {
      GrayImage preview(stack.width, stack.height);
      const float* src = stack.channel(c);
      for (size_t i = 0; i < preview.data.size(); ++i)
        preview.data[i] = uint8_t(std::clamp(src[i] * 255.0f + 0.5f, 0.f, 255.f));
      write_png(out / (file.stem().string() + "_ch" + std::to_string(c) + ".png"),
                preview);
    }
    ++count;
  }
  if (count == 0) throw DataError("no image PNGs in " + in.string());
  std::cout << "transformed " << count << " images -> " << out.string() << "\n";
  return 0;
}

int cmd_train(const ScenarioConfig& cfg, bool dry_run) {
  std::cout << "stage plan:";
  for (const auto& stage : plan_stages(cfg)) std::cout << " " << stage;
  std::cout << "\n";
  if (dry_run) return 0;

  const ScenarioResult result = run_scenario(cfg);
  std::cout << "scenario " << to_string(cfg.scenario) << ": train "
            << result.report.train_jaccard * 100 << "%, test mu "
            << result.report.mu * 100 << "%, sigma " << result.report.sigma * 100
            << "%\n";
  std::cout << "weights: " << result.weights_path.string() << "\n";
  std::cout << "report:  " << result.report_path.string() << "\n";
  return 0;
}

int cmd_predict(const fs::path& weights_file, const fs::path& in, const fs::path& out,
                double tau, bool no_postprocess, bool overlay, int border) {
  const LoadedWeights loaded = load_weights(weights_file);
  fs::create_directories(out);
  int count = 0;

  const auto predict_one = [&](const std::string& id, const FeatureStack& stack,
                               const GrayImage& base) {
    const Raster prob = predict_prob(loaded.params, stack, border);
    BinaryMask mask = postprocess_mask(prob, tau, !no_postprocess);
    write_png(out / (id + ".png"), mask);
    if (overlay) {
      const GrayImage cropped = crop_border(base, border);
      write_png(out / (id + "_overlay.png"), contour_overlay(cropped, mask));
    }
    ++count;
  };

  std::vector<fs::path> stacks;
  if (fs::is_directory(in))
    for (const auto& entry : fs::directory_iterator(in))
      if (entry.path().extension() == ".lpfs") stacks.push_back(entry.path());
  std::sort(stacks.begin(), stacks.end());

  if (!stacks.empty()) {
    for (const auto& file : stacks) {
      const FeatureStack stack = read_feature_stack(file);
      GrayImage base(stack.width, stack.height);
      const float* gray = stack.channel(0);
      for (size_t i = 0; i < base.data.size(); ++i)
        base.data[i] = uint8_t(std::clamp(gray[i] * 255.0f + 0.5f, 0.f, 255.f));
      predict_one(file.stem().string(), stack, base);
    }
  } else {
    for (const auto& file : png_files(in)) {
      if (is_mask_name(file)) continue;
      const GrayImage img = read_png_gray(file);
      if (loaded.params.cfg.in_channels != 1)
        throw DataError("weights expect " +
                        std::to_string(loaded.params.cfg.in_channels) +
                        " channels; provide .lpfs stacks instead of PNGs");
      FeatureStack stack(1, img.width, img.height);
      for (size_t i = 0; i < img.data.size(); ++i)
        stack.data[i] = img.data[i] / 255.0f;
      predict_one(file.stem().string(), stack, img);
    }
  }
  if (count == 0) throw DataError("no inputs in " + in.string());
  std::cout << "predicted " << count << " masks -> " << out.string() << "\n";
  return 0;
}

int cmd_evaluate(const fs::path& pred, const fs::path& truth, int batch_size,
                 int batches, uint64_t seed, const fs::path& out_csv) {
  std::vector<BinaryMask> predictions, truths;
  std::vector<std::string> ids;
  for (const auto& file : png_files(pred)) {
    const std::string id = file.stem().string();
    fs::path truth_path = truth / (id + "_mask.png");
    if (!fs::exists(truth_path)) truth_path = truth / (id + ".png");
    if (!fs::exists(truth_path)) {
      std::cerr << "warning: no ground truth for " << id << ", skipped\n";
      continue;
    }
    predictions.push_back(read_png_mask(file));
    truths.push_back(read_png_mask(truth_path));
    ids.push_back(id);
  }
  if (predictions.empty()) throw DataError("no prediction/truth pairs found");

  EvalReport report = evaluate_batches(predictions, truths, batch_size, batches, seed);
  write_report_csv(out_csv, report, ids);
  std::cout << "pairs: " << predictions.size() << ", mu " << report.mu * 100
            << "%, sigma " << report.sigma * 100 << "% -> " << out_csv.string()
            << "\n";
  return 0;
}

int cmd_synth(const fs::path& out, int n, int n_test, uint64_t seed, int size) {
  const DatasetManifest manifest =
      synth_dataset(out, n, seed, SynthParams{.size = size}, n_test);
  std::cout << "wrote " << manifest.train_count() << " train / "
            << manifest.test_count() << " test pairs -> " << out.string() << "\n";
  return 0;
}

int cmd_compare(const ScenarioConfig& base, const std::string& scenarios,
                const std::vector<uint64_t>& seeds) {
  std::vector<Scenario> list;
  for (size_t pos = 0; pos < scenarios.size();) {
    const auto comma = scenarios.find(',', pos);
    const auto token = scenarios.substr(pos, comma == std::string::npos
                                                 ? std::string::npos
                                                 : comma - pos);
    list.push_back(scenario_from_string(token));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (list.size() < 2) throw ConfigError("compare: need at least two scenarios");

  for (uint64_t seed : seeds) {
    std::vector<ScenarioConfig> cfgs;
    for (Scenario s : list) {
      ScenarioConfig cfg = base;
      cfg.scenario = s;
      cfg.seed = seed;
      cfg.train.rng_seed = seed;
      cfg.net.in_channels = cfg.channels();
      cfg.out_dir = base.out_dir / ("seed_" + std::to_string(seed));
      cfgs.push_back(cfg);
    }
    std::cout << "seed " << seed << ":\n" << compare_scenarios(cfgs) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"skin-lesion segmentation pipeline"};
  app.require_subcommand(1);

  std::string config_file;
  uint64_t seed = 0;
  bool seed_set = false;
  int jobs = 0;
  app.add_option("--config", config_file, "scenario config file (TOML)")
      ->envname("LESIONPIPE_CONFIG");
  app.add_option("--seed", seed, "override the config seed")
      ->each([&](const std::string&) { seed_set = true; });
  app.add_option("--jobs", jobs, "worker threads for per-image stages");

  const auto base_config = [&]() {
    ScenarioConfig cfg = config_file.empty() ? profile_config(profile_from_env())
                                             : load_config(config_file);
    if (seed_set) {
      cfg.seed = seed;
      cfg.train.rng_seed = seed;
    }
    if (jobs > 0) cfg.jobs = jobs;
    cfg.net.in_channels = cfg.channels();
    return cfg;
  };

  // prepare
  auto* prepare = app.add_subcommand("prepare", "resize, border and grayscale");
  fs::path prep_in, prep_out;
  int prep_size = -1, prep_border = -1;
  prepare->add_option("--in", prep_in, "input directory")->required();
  prepare->add_option("--out", prep_out, "output directory")->required();
  prepare->add_option("--size", prep_size, "prepared image size");
  prepare->add_option("--border", prep_border, "border width");

  // preprocess
  auto* preprocess = app.add_subcommand("preprocess", "contrast, hair, vignette");
  fs::path pre_in, pre_out;
  double clip = 0.02, vignette_threshold = 6.0;
  preprocess->add_option("--in", pre_in, "input directory")->required();
  preprocess->add_option("--out", pre_out, "output directory")->required();
  preprocess->add_option("--clip", clip, "histogram clip fraction per tail");
  preprocess->add_option("--vignette-threshold", vignette_threshold,
                         "ring darkness threshold");

  // transform
  auto* transform = app.add_subcommand("transform", "LBP / wavelet input stacks");
  std::string tf_scenario;
  fs::path tf_in, tf_out;
  transform->add_option("--scenario", tf_scenario, "C or D")->required();
  transform->add_option("--in", tf_in, "input directory")->required();
  transform->add_option("--out", tf_out, "output directory")->required();

  // train
  auto* train = app.add_subcommand("train", "run a full scenario");
  bool dry_run = false;
  train->add_flag("--dry-run", dry_run, "print the stage plan and exit");

  // predict
  auto* predict = app.add_subcommand("predict", "segment images with saved weights");
  fs::path pr_weights, pr_in, pr_out;
  double tau = 0.5;
  bool no_postprocess = false, overlay = false;
  int pr_border = -1;
  predict->add_option("--weights", pr_weights, "weight file")->required();
  predict->add_option("--in", pr_in, "input directory (.lpfs or .png)")->required();
  predict->add_option("--out", pr_out, "output directory")->required();
  predict->add_option("--tau", tau, "threshold");
  predict->add_flag("--no-postprocess", no_postprocess, "threshold only");
  predict->add_flag("--overlay", overlay, "write red-contour overlays");
  predict->add_option("--border", pr_border, "border to crop from the output");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "batched Jaccard report");
  fs::path ev_pred, ev_truth, ev_out = "report.csv";
  int ev_batch_size = 16, ev_batches = 72;
  evaluate->add_option("--pred", ev_pred, "predicted masks")->required();
  evaluate->add_option("--truth", ev_truth, "ground-truth masks")->required();
  evaluate->add_option("--batch-size", ev_batch_size, "images per batch");
  evaluate->add_option("--batches", ev_batches, "number of batches");
  evaluate->add_option("--out", ev_out, "report CSV path");

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  fs::path sy_out;
  int sy_n = 80, sy_n_test = 20, sy_size = -1;
  synth->add_option("--out", sy_out, "output root")->required();
  synth->add_option("--n", sy_n, "total pairs");
  synth->add_option("--n-test", sy_n_test, "pairs assigned to the test split");
  synth->add_option("--size", sy_size, "image size");

  // compare
  auto* compare = app.add_subcommand("compare", "run scenarios side by side");
  std::string cmp_scenarios = "A,B,D";
  std::vector<uint64_t> cmp_seeds;
  compare->add_option("--scenarios", cmp_scenarios, "comma-separated list");
  compare->add_option("--seeds", cmp_seeds, "seeds to run (default: config seed)");

  try {
    app.parse(argc, argv);

    const ScenarioConfig cfg = base_config();
    if (*prepare)
      return cmd_prepare(prep_in, prep_out,
                         prep_size > 0 ? prep_size : cfg.image_size,
                         prep_border >= 0 ? prep_border : cfg.border);
    if (*preprocess) return cmd_preprocess(pre_in, pre_out, clip, vignette_threshold);
    if (*transform) return cmd_transform(tf_scenario, tf_in, tf_out, cfg);
    if (*train) return cmd_train(cfg, dry_run);
    if (*predict)
      return cmd_predict(pr_weights, pr_in, pr_out, tau, no_postprocess, overlay,
                         pr_border >= 0 ? pr_border : cfg.border);
    if (*evaluate)
      return cmd_evaluate(ev_pred, ev_truth, ev_batch_size, ev_batches,
                          seed_set ? seed : cfg.seed, ev_out);
    if (*synth)
      return cmd_synth(sy_out, sy_n, sy_n_test, seed_set ? seed : cfg.seed,
                       sy_size > 0 ? sy_size : cfg.synth_size);
    if (*compare)
      return cmd_compare(cfg, cmp_scenarios,
                         cmp_seeds.empty() ? std::vector<uint64_t>{cfg.seed}
                                           : cmp_seeds);
    return 0;
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
