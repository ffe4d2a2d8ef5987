// Command-line front end over the gliomaseg C API.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gliomaseg/gliomaseg.h"

namespace {

struct ConfigArgs {
  std::string source = "toy";
  std::vector<std::string> overrides;
  int threads = 0;
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("-c,--config", args.source, "preset (toy, paper) or JSON config file")->capture_default_str();
  cmd->add_option("--set", args.overrides, "override a config key, key=value (repeatable)");
  cmd->add_option("--threads", args.threads, "worker threads (default: GLIOMASEG_THREADS or all)");
}

[[noreturn]] void die(int status) {
  std::cerr << "error: " << gs_status_name(status) << ": " << gs_last_error_message() << '\n';
  std::exit(gs_exit_code(status));
}

void check(int status) {
  if (status != GS_OK) die(status);
}

struct Config {
  gs_config* handle = nullptr;
  ~Config() { gs_config_free(handle); }
};

void load_config(const ConfigArgs& args, Config& cfg) {
  std::vector<const char*> ov;
  for (const auto& o : args.overrides) ov.push_back(o.c_str());
  check(gs_config_create(args.source.c_str(), ov.data(), ov.size(), &cfg.handle));
  if (args.threads > 0) check(gs_set_threads(args.threads));
}

/// Prints and frees a string returned by the library.
void emit(char* s, const std::string& out_file = {}) {
  if (out_file.empty()) {
    std::cout << s << '\n';
  } else {
    std::ofstream f(out_file, std::ios::trunc);
    f << s << '\n';
    if (!f) {
      gs_free_string(s);
      std::cerr << "error: IoFailure: cannot write " << out_file << '\n';
      std::exit(3);
    }
  }
  gs_free_string(s);
}

std::vector<const char*> c_strings(const std::vector<std::string>& v) {
  std::vector<const char*> out;
  for (const auto& s : v) out.push_back(s.c_str());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage glioma segmentation: ROI detection, attention U-Net, TTA uncertainty"};
  app.require_subcommand(1);

  ConfigArgs cfg_args;
  std::string out, manifest, binary_ckpt, multiclass_ckpt, predictions, report_file;
  std::vector<std::string> cases;
  bool no_roi = false, no_tta = false;

  auto* phantom = app.add_subcommand("phantom", "generate a synthetic phantom dataset");
  add_config_options(phantom, cfg_args);
  phantom->add_option("-o,--out", out, "output directory")->required();

  auto* show = app.add_subcommand("config", "print the resolved configuration");
  add_config_options(show, cfg_args);

  auto* split = app.add_subcommand("split", "print the train/validation split");
  add_config_options(split, cfg_args);
  split->add_option("-m,--manifest", manifest, "dataset manifest")->required();

  auto* train_bin = app.add_subcommand("train-binary", "train the binary ROI network");
  add_config_options(train_bin, cfg_args);
  train_bin->add_option("-m,--manifest", manifest, "dataset manifest")->required();
  train_bin->add_option("-o,--out", out, "output directory")->required();

  auto* train_mc = app.add_subcommand("train-multiclass", "train the multiclass network");
  add_config_options(train_mc, cfg_args);
  train_mc->add_option("-m,--manifest", manifest, "dataset manifest")->required();
  train_mc->add_option("-o,--out", out, "output directory")->required();
  train_mc->add_option("--binary", binary_ckpt, "binary checkpoint for ROI crops (default: ground-truth ROI)");
  train_mc->add_flag("--no-roi", no_roi, "train on whole volumes");

  auto* predict = app.add_subcommand("predict", "segment cases with the full pipeline");
  add_config_options(predict, cfg_args);
  predict->add_option("-m,--manifest", manifest, "dataset manifest")->required();
  predict->add_option("--multiclass", multiclass_ckpt, "multiclass checkpoint")->required();
  predict->add_option("--binary", binary_ckpt, "binary checkpoint (omit to segment whole volumes)");
  predict->add_option("-o,--out", out, "predictions directory")->required();
  predict->add_option("--case", cases, "case id (repeatable; default all)");
  predict->add_flag("--no-tta", no_tta, "disable test-time augmentation");

  auto* evaluate = app.add_subcommand("evaluate", "region dice of stored predictions");
  evaluate->add_option("-m,--manifest", manifest, "dataset manifest")->required();
  evaluate->add_option("-p,--predictions", predictions, "predictions directory")->required();
  evaluate->add_option("--case", cases, "case id (repeatable; default all labelled)");
  evaluate->add_option("-o,--out", out, "write the report here instead of stdout");

  auto* report = app.add_subcommand("report", "percentile montage of an evaluation report");
  report->add_option("-m,--manifest", manifest, "dataset manifest")->required();
  report->add_option("-p,--predictions", predictions, "predictions directory")->required();
  report->add_option("-r,--report", report_file, "report JSON from evaluate")->required();
  report->add_option("-o,--out", out, "image directory")->required();

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  gradcheck->add_option("-o,--out", out, "write the results here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    for (auto& ch : msg) {
      if (ch == '\n') ch = ' ';
    }
    std::cerr << "error: ConfigError: " << msg << '\n';
    return 2;
  }

  char* result = nullptr;
  Config cfg;
  if (*phantom) {
    load_config(cfg_args, cfg);
    check(gs_phantom(cfg.handle, out.c_str(), &result));
  } else if (*show) {
    load_config(cfg_args, cfg);
    check(gs_config_json(cfg.handle, &result));
  } else if (*split) {
    load_config(cfg_args, cfg);
    check(gs_split(cfg.handle, manifest.c_str(), &result));
  } else if (*train_bin) {
    load_config(cfg_args, cfg);
    check(gs_train_binary(cfg.handle, manifest.c_str(), out.c_str(), &result));
  } else if (*train_mc) {
    if (no_roi) cfg_args.overrides.push_back("multiclass.use_roi=false");
    load_config(cfg_args, cfg);
    check(gs_train_multiclass(cfg.handle, manifest.c_str(), binary_ckpt.empty() ? nullptr : binary_ckpt.c_str(),
                              out.c_str(), &result));
  } else if (*predict) {
    if (no_tta) cfg_args.overrides.push_back("predict.tta=false");
    load_config(cfg_args, cfg);
    const auto ids = c_strings(cases);
    check(gs_predict(cfg.handle, manifest.c_str(), binary_ckpt.empty() ? nullptr : binary_ckpt.c_str(),
                     multiclass_ckpt.c_str(), out.c_str(), ids.empty() ? nullptr : ids.data(), ids.size(), &result));
  } else if (*evaluate) {
    const auto ids = c_strings(cases);
    check(gs_evaluate(manifest.c_str(), predictions.c_str(), ids.empty() ? nullptr : ids.data(), ids.size(), &result));
    emit(result, out);
    return 0;
  } else if (*report) {
    std::ifstream in(report_file);
    if (!in) {
      std::cerr << "error: IoFailure: cannot read " << report_file << '\n';
      return 3;
    }
    std::stringstream text;
    text << in.rdbuf();
    check(gs_report(manifest.c_str(), predictions.c_str(), text.str().c_str(), out.c_str(), &result));
  } else if (*gradcheck) {
    check(gs_gradcheck(&result));
    const bool passed = std::string(result).find("\"passed\": false") == std::string::npos;
    emit(result, out);
    if (!passed) {
      std::cerr << "error: NumericFailure: gradient check above tolerance\n";
      return 4;
    }
    return 0;
  }
  emit(result);
  return 0;
}
