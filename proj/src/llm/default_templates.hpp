#pragma once

#include <string_view>
#include <utility>
#include <vector>

namespace trialogue::llm::detail {

const std::vector<std::pair<std::string_view, std::string_view>>& embedded_templates();

}  // namespace trialogue::llm::detail
