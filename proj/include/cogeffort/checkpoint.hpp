#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cogeffort/network.hpp"
#include "cogeffort/training.hpp"

namespace cogeffort {

// Flat text checkpoint:
//
//   cogeffort-checkpoint 1
//   <key> <value>              one line per ModelConfig field, then best_epoch
//   tensors <count>
//   tensor <name> <rank> <d0> ... <dn>
//   <hex-float values, space separated>
//   ...
//   end
//
// Values are written with %a so a load reproduces every bit.
void write_checkpoint(std::ostream& out, const Network& net, int best_epoch);
void save_checkpoint(const std::string& path, const Network& net, int best_epoch);

struct LoadedCheckpoint {
  Network network;
  int best_epoch = 0;
};
LoadedCheckpoint read_checkpoint(std::istream& in);
LoadedCheckpoint load_checkpoint(const std::string& path);

/// epoch,train_loss,train_acc,val_loss,val_acc
void write_history_csv(std::ostream& out, const std::vector<EpochStats>& history);
std::vector<EpochStats> read_history_csv(std::istream& in);

}  // namespace cogeffort
