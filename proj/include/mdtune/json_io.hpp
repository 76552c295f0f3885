#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "mdtune/balance.hpp"
#include "mdtune/econ.hpp"
#include "mdtune/hardware.hpp"
#include "mdtune/launch.hpp"
#include "mdtune/log_parser.hpp"
#include "mdtune/sweep.hpp"
#include "mdtune/workload.hpp"

namespace mdtune {

using json = nlohmann::ordered_json;

// Reading is strict: unknown fields and wrong types raise InvalidConfig
// naming the JSON path of the offending field, e.g. "node.gpus[1].price_eur".

json encode(const GpuSpec& v);
json encode(const CpuSpec& v);
json encode(const NodeSpec& v);
json encode(const ClusterSpec& v);
json encode(const DdGrid& v);
json encode(const LaunchConfig& v);
json encode(const EnumerationOptions& v);
json encode(const EngineProfile& v);
json encode(const ReplicaSlot& v);
json encode(const MultiSimPlan& v);
json encode(const Box& v);
json encode(const Workload& v);
json encode(const Grid3& v);
json encode(const LoadBalanceRow& v);
json encode(const PerfMetrics& v);
json encode(const Advisory& v);
json encode(const BalanceState& v);
json encode(const SyntheticNodeProfile& v);
json encode(const SweepOptions& v);
json encode(const SweepRow& v);
json encode(const SweepResult& v);
json encode(const EconParams& v);
json encode(const PowerReading& v);
json encode(const EconRow& v);
json encode(const ClockFit& v);
json encode(const HardwareCandidate& v);

template <class T>
T decode(const json& j, const std::string& path);

template <> GpuSpec decode<GpuSpec>(const json& j, const std::string& path);
template <> CpuSpec decode<CpuSpec>(const json& j, const std::string& path);
template <> NodeSpec decode<NodeSpec>(const json& j, const std::string& path);
template <> ClusterSpec decode<ClusterSpec>(const json& j, const std::string& path);
template <> DdGrid decode<DdGrid>(const json& j, const std::string& path);
template <> LaunchConfig decode<LaunchConfig>(const json& j, const std::string& path);
template <> EnumerationOptions decode<EnumerationOptions>(const json& j, const std::string& path);
template <> EngineProfile decode<EngineProfile>(const json& j, const std::string& path);
template <> Box decode<Box>(const json& j, const std::string& path);
template <> Workload decode<Workload>(const json& j, const std::string& path);
template <> Grid3 decode<Grid3>(const json& j, const std::string& path);
template <> LoadBalanceRow decode<LoadBalanceRow>(const json& j, const std::string& path);
template <> Advisory decode<Advisory>(const json& j, const std::string& path);
template <> PerfMetrics decode<PerfMetrics>(const json& j, const std::string& path);
template <> SyntheticNodeProfile decode<SyntheticNodeProfile>(const json& j, const std::string& path);
template <> SweepOptions decode<SweepOptions>(const json& j, const std::string& path);
template <> SweepRow decode<SweepRow>(const json& j, const std::string& path);
template <> SweepResult decode<SweepResult>(const json& j, const std::string& path);
template <> EconParams decode<EconParams>(const json& j, const std::string& path);
template <> PowerReading decode<PowerReading>(const json& j, const std::string& path);
template <> ClockPoint decode<ClockPoint>(const json& j, const std::string& path);
template <> HardwareCandidate decode<HardwareCandidate>(const json& j, const std::string& path);

// Parses text, turning syntax errors into ParseError with the byte offset.
json parse_json(std::string_view text);

// Stable two-space indented dump with a trailing newline.
std::string dump(const json& j);

}  // namespace mdtune
