#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "dair/harness/config.hpp"

namespace dair::harness {

std::vector<std::string> preset_names();

/// Defaults for a named setup. MNIST presets take their IDX paths from
/// `mnist`. Unknown names -> ConfigError listing the known ones.
ExperimentConfig make_preset(std::string_view name, const MnistPaths& mnist = {});

/// Variant from "<mode>[-<reg>][@<loss>]", e.g. "erm", "dair-sq", "da-erm@huber".
/// The loss defaults to `loss`.
Variant parse_variant(const std::string& text, const LossSpec& loss);

}  // namespace dair::harness
