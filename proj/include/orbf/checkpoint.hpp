#pragma once

#include "orbf/estimators.hpp"
#include "orbf/prototypes.hpp"
#include "orbf/rbfnet.hpp"

#include <filesystem>
#include <iosfwd>

namespace orbf {

/// Text snapshots. Every file starts with "<kind> <version>"; doubles use the
/// shortest representation that round-trips, so a restored model predicts
/// bit-identically to the original.
inline constexpr int kCheckpointVersion = 1;

void save_prototypes(std::ostream& out, const PrototypeSet& set);
PrototypeSet load_prototypes(std::istream& in);

void save_ewrls(std::ostream& out, const EwrlsState& state);
EwrlsState load_ewrls(std::istream& in);

/// Selection, standardizer, prototypes, head and pending-label queue.
void save_checkpoint(std::ostream& out, const RbfNetModel& model);
RbfNetModel load_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const RbfNetModel& model);
RbfNetModel load_checkpoint(const std::filesystem::path& path);

} // namespace orbf
