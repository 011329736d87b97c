#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <thermaldc/thermaldc.hpp>

namespace fs = std::filesystem;
using namespace thermaldc;

namespace {

int simulate(const std::string& config_path, const std::optional<std::string>& policy,
             const std::optional<std::uint64_t>& seed, const std::optional<int>& replicates, const std::string& out) {
  auto cfg = config::load(config_path);
  if (policy) cfg.policy = *policy;
  if (seed) cfg.seed = *seed;
  if (replicates) cfg.replicates = *replicates;
  cfg = validate_config(cfg);
  const auto result = engine::run(cfg);
  const auto paths = io::write_report(cfg, result, out);
  std::cout << io::summary_csv(result.summary);
  std::cerr << "wrote " << paths.summary.string() << ", " << paths.per_step.size() << " per-step file(s), "
            << paths.manifest.string() << "\n";
  return 0;
}

int train(const std::optional<std::string>& data, const std::optional<std::size_t>& synthetic, std::size_t epochs,
          std::uint64_t seed, double epsilon, const std::string& out) {
  std::vector<predictor::TelemetryRecord> records;
  if (data) {
    records = predictor::load_telemetry(*data);
  } else {
    predictor::SyntheticTelemetryConfig sc;
    sc.records = *synthetic;
    records = predictor::synthetic_telemetry(sc, seed);
  }
  predictor::TrainHyper hyper;
  hyper.epochs = epochs;
  hyper.seed = seed;
  hyper.epsilon_rel = epsilon;
  const auto samples = predictor::make_samples(predictor::by_server(records), hyper.window);
  hyper.test_count = std::min<std::size_t>(hyper.test_count, samples.size() / 10);
  auto [model, rep] = predictor::train_predictor(samples, hyper);
  predictor::save_model(model, out);
  std::cout << "train_samples," << rep.train_samples << "\n"
            << "test_samples," << rep.test_samples << "\n"
            << "epochs_run," << rep.epochs_run << "\n"
            << "final_train_mse," << io::format_double(rep.final_train_mse) << "\n"
            << "test_accuracy," << io::format_double(rep.test_accuracy) << "\n";
  return 0;
}

int predict(const std::string& model_path, const std::string& data, double epsilon) {
  const auto model = predictor::load_model(model_path);
  const auto records = predictor::load_telemetry(data);
  const auto servers = predictor::by_server(records);
  const auto samples = predictor::make_samples(servers, 8);
  const auto preds = predictor::predict_samples(model, samples);
  std::vector<double> actual;
  std::cout << "server_id,timestamp,cpu_temp_c,predicted_c\n";
  std::size_t i = 0;
  for (const auto& recs : servers)
    for (const auto& r : recs) {
      std::cout << r.server_id << ',' << predictor::format_timestamp(r.timestamp_s) << ','
                << io::format_double(r.cpu_temp_c) << ',' << io::format_double(preds[i++]) << "\n";
      actual.push_back(r.cpu_temp_c);
    }
  std::cerr << "accuracy," << io::format_double(predictor::prediction_accuracy(preds, actual, epsilon)) << "\n";
  return 0;
}

int gen_workload(std::int64_t count, std::uint64_t seed, const std::optional<double>& lambda, const std::string& out) {
  DataCenterConfig cfg = default_config();
  cfg.seed = seed;
  cfg.workload.count = count;
  if (lambda) cfg.workload.lambda_per_interval = *lambda;
  const auto ws = engine::Simulation::make_workloads(cfg);
  std::string csv = "id,arrival_s,length_mi,mips_requested,file_size_mb,output_size_mb,ram_mb,cost_cd\n";
  for (const auto& w : ws) {
    csv += std::to_string(w.id) + ',' + std::to_string(w.arrival_s);
    for (double v : {w.length_mi, w.mips_requested, w.file_size_mb, w.output_size_mb, w.ram_mb, w.cost_cd})
      csv += ',' + io::format_double(v);
    csv += '\n';
  }
  io::write_file(out, csv);
  return 0;
}

int report(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (name.rfind("per_step", 0) == 0 && e.path().extension() == ".csv") files.push_back(e.path());
  }
  if (files.empty()) throw IoError("no per_step csv in " + dir);
  std::sort(files.begin(), files.end());
  std::vector<std::pair<std::string, io::StepSummary>> items;
  for (const auto& f : files) items.emplace_back(f.filename().string(), io::summarize_steps(io::read_per_step(f)));
  std::cout << io::step_summary_csv(items);
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Thermal-aware cloud datacenter simulator"};
  app.require_subcommand(1);

  auto* sim = app.add_subcommand("simulate", "Run a simulation and write CSV reports");
  std::string config_path, out_dir = "out";
  std::optional<std::string> policy;
  std::optional<std::uint64_t> seed;
  std::optional<int> replicates;
  sim->add_option("--config", config_path, "Config JSON")->required();
  sim->add_option("--policy", policy, "Policy name");
  sim->add_option("--seed", seed, "Base seed");
  sim->add_option("--replicates", replicates, "Replicate count");
  sim->add_option("--out", out_dir, "Output directory")->capture_default_str();

  auto* tr = app.add_subcommand("train-predictor", "Train the temperature predictor");
  std::optional<std::string> data;
  std::optional<std::size_t> synthetic;
  std::size_t epochs = predictor::TrainHyper{}.epochs;
  std::uint64_t train_seed = 1;
  double train_eps = 0.05;
  std::string model_out;
  auto* data_opt = tr->add_option("--data", data, "Telemetry CSV");
  auto* syn_opt = tr->add_option("--synthetic", synthetic, "Generate N synthetic records");
  data_opt->excludes(syn_opt);
  tr->add_option("--epochs", epochs, "Training epochs")->capture_default_str();
  tr->add_option("--seed", train_seed, "Seed")->capture_default_str();
  tr->add_option("--epsilon", train_eps, "Relative tolerance of a correct prediction")->capture_default_str();
  tr->add_option("--out", model_out, "Model file")->required();

  auto* pr = app.add_subcommand("predict", "Predict CPU temperatures from telemetry");
  std::string model_in, pred_data;
  double eps = 0.05;
  pr->add_option("--model", model_in, "Model file")->required();
  pr->add_option("--data", pred_data, "Telemetry CSV")->required();
  pr->add_option("--epsilon", eps, "Relative tolerance of a correct prediction")->capture_default_str();

  auto* gw = app.add_subcommand("gen-workload", "Generate synthetic workloads");
  std::int64_t count = 500;
  std::uint64_t gw_seed = 1;
  std::optional<double> lambda;
  std::string gw_out;
  gw->add_option("--count", count, "Number of workloads")->capture_default_str();
  gw->add_option("--seed", gw_seed, "Seed")->capture_default_str();
  gw->add_option("--lambda", lambda, "Expected arrivals per interval");
  gw->add_option("--out", gw_out, "Output CSV")->required();

  auto* rp = app.add_subcommand("report", "Re-summarize per-step CSVs");
  std::string in_dir;
  rp->add_option("--in", in_dir, "Report directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::config);
  }

  try {
    if (sim->parsed()) return simulate(config_path, policy, seed, replicates, out_dir);
    if (tr->parsed()) {
      if (!data && !synthetic) throw InvalidConfig("train-predictor", "one of --data or --synthetic is required");
      return train(data, synthetic, epochs, train_seed, train_eps, model_out);
    }
    if (pr->parsed()) return predict(model_in, pred_data, eps);
    if (gw->parsed()) return gen_workload(count, gw_seed, lambda, gw_out);
    if (rp->parsed()) return report(in_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(exit_code(e));
  }
  return 0;
}
