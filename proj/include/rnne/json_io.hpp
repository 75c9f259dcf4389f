#pragma once

#include "rnne/model.hpp"

#include <json.hpp>

namespace rnne {

nlohmann::json to_json(const Hyperparams& hp);
/// Missing keys keep the values already in `hp`.
void update_from_json(Hyperparams& hp, const nlohmann::json& j);

nlohmann::json to_json(const ModelParams& p);
ModelParams model_params_from_json(const nlohmann::json& j);

}  // namespace rnne
