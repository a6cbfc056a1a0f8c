#include "gridse/network.hpp"

#include "gridse/errors.hpp"

namespace gridse {

Network::Network(Real base_mva, std::vector<Bus> buses, std::vector<Branch> branches)
    : base_mva_(base_mva), buses_(std::move(buses)), branches_(std::move(branches)) {
  if (base_mva_ <= 0.0) throw ModelError("base_MVA must be positive");
  if (buses_.empty()) throw ModelError("network has no buses");

  index_.reserve(buses_.size());
  slack_index_ = -1;
  for (int i = 0; i < static_cast<int>(buses_.size()); ++i) {
    const Bus& b = buses_[i];
    if (b.type == BusType::Isolated)
      throw ModelError("isolated bus " + std::to_string(b.id) + " must be dropped before construction");
    if (b.vm <= 0.0) throw ModelError("ZeroVm: bus " + std::to_string(b.id));
    if (!index_.emplace(b.id, i).second)
      throw ModelError("duplicate bus id " + std::to_string(b.id));
    if (b.type == BusType::Slack && slack_index_ < 0) slack_index_ = i;
  }
  if (slack_index_ < 0) slack_index_ = 0;

  for (int k = 0; k < static_cast<int>(branches_.size()); ++k) {
    const Branch& br = branches_[k];
    if (br.from_bus == br.to_bus)
      throw ModelError("branch " + std::to_string(k) + " connects bus " +
                       std::to_string(br.from_bus) + " to itself");
    if (!index_.count(br.from_bus) || !index_.count(br.to_bus))
      throw ModelError("UnknownBusReference: branch " + std::to_string(k));
  }
}

int Network::index_of(int external_id) const {
  auto it = index_.find(external_id);
  if (it == index_.end())
    throw ModelError("unknown bus id " + std::to_string(external_id));
  return it->second;
}

std::optional<int> Network::try_index_of(int external_id) const {
  auto it = index_.find(external_id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

}  // namespace gridse
