// Minimal external SUT over stdio: cruise at 8 m/s in the current lane.
#include <iostream>
#include <string>

#include <nlohmann/json.hpp>

int main() {
  std::string line;
  while (std::getline(std::cin, line)) {
    const auto msg = nlohmann::json::parse(line, nullptr, false);
    if (msg.is_discarded()) continue;
    const std::string type = msg.value("type", "");
    if (type == "step") {
      const std::string lane = msg["ego"].value("lane", "");
      std::cout << nlohmann::json{{"target_speed", 8.0}, {"target_lane", lane}}.dump() << std::endl;
    } else if (type == "end") {
      break;
    }
  }
}
