#pragma once

#include <memory>
#include <string>

#include "otflow/models.hpp"
#include "otflow/rectflow.hpp"

namespace otflow {

// Checkpoint directory layout: model.json carries kind, architecture,
// iteration and running loss; each layer's weights and biases are separate
// OTF1 blobs (w0.otf1, b0.otf1, ...).
void save_flow_checkpoint(const std::string& dir, const Checkpoint& ckpt);
Checkpoint load_flow_checkpoint(const std::string& dir);

std::shared_ptr<MlpFlowField> load_flow_field(const std::string& dir);

// Score model descriptions, JSON: {"kind": ..., per-kind parameters}.
// mlp scores reference an init seed so they rebuild identically.
ScorePtr score_from_json_file(const std::string& path);
ScorePtr score_from_json_text(const std::string& text);

}  // namespace otflow
