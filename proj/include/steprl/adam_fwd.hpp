#pragma once

namespace steprl {
struct AdamState;
struct AdamConfig;
}  // namespace steprl
