#pragma once

#include <string>

#include "rulenet/dnf.hpp"
#include "rulenet/model.hpp"
#include "rulenet/train.hpp"

namespace rulenet {

struct Checkpoint {
    ModelParams params;
    FeatureMeta meta;
};

// Single JSON document; doubles round-trip value-exact.
std::string checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const std::string& text);
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

std::string report_to_json(const TrainReport& report);
void save_report(const TrainReport& report, const std::string& path);

// epoch,loss,tau,restart_index
std::string history_to_csv(const TrainReport& report);

std::string dnf_to_json(const Dnf& dnf);
Dnf dnf_from_json(const std::string& text);

} // namespace rulenet
