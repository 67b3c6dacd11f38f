#pragma once

#include <string>
#include <vector>

#include "steprl/env.hpp"
#include "steprl/search.hpp"
#include "steprl/trainer.hpp"

namespace steprl {

// Flat "key = value" configuration with '#' comments. Unknown keys are
// rejected; every key has a documented default (see config_help()).
struct RunConfig {
  std::uint64_t seed = 42;
  int threads = 1;
  EnvSpec env;
  TrainerConfig trainer;
  SearchConfig search;
  std::size_t train_questions = 512;
  std::size_t val_questions = 1000;
  std::string out_dir = "runs/default";
};

RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

// One line per key: "name  default  description".
std::string config_help();

// The exact key table (name, default, doc), single source of truth.
struct ConfigKeyDoc {
  const char* name;
  const char* def;
  const char* doc;
};
std::vector<ConfigKeyDoc> config_keys();

}  // namespace steprl
