#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <deque>
#include <ostream>
#include <string>
#include <unordered_set>
#include <vector>

#include "dagfl/errors.hpp"
#include "dagfl/learning.hpp"

#include <json.hpp>

namespace dagfl {

using TransactionId = std::uint32_t;

// Publisher index of the genesis transaction.
inline constexpr int kGenesisPublisher = -1;

struct Transaction {
  TransactionId id = 0;
  std::vector<TransactionId> parents;  // two entries, empty for genesis
  ModelParams params;
  int publisher = kGenesisPublisher;
  int round = 0;
  bool poisoned = false;  // observer metadata only; never read by protocol code

  bool is_genesis() const { return parents.empty(); }
};

// Append-only DAG of model updates. Ids are assigned monotonically, so
// acyclicity holds by construction: parents always precede children.
class Dag {
 public:
  static Dag create_genesis(ModelParams params) {
    params.arch.validate();
    if (params.values.size() != params.arch.param_count()) {
      throw ArchitectureMismatch("genesis params length does not match architecture");
    }
    Dag dag;
    Transaction genesis;
    genesis.id = 0;
    genesis.params = std::move(params);
    dag.transactions_.push_back(std::move(genesis));
    dag.children_.emplace_back();
    dag.tips_.push_back(0);
    return dag;
  }

  TransactionId add_transaction(std::array<TransactionId, 2> parents, ModelParams params,
                                int publisher, int round, bool poisoned) {
    for (TransactionId p : parents) {
      if (p >= transactions_.size()) {
        throw UnknownParent("unknown parent id " + std::to_string(p));
      }
    }
    if (params.values.size() != genesis_tx().params.values.size()) {
      throw ArchitectureMismatch("transaction params length does not match genesis");
    }
    if (!params.finite()) {
      throw InvalidParameter("transaction params must be finite");
    }

    Transaction tx;
    tx.id = static_cast<TransactionId>(transactions_.size());
    tx.parents.assign(parents.begin(), parents.end());
    tx.params = std::move(params);
    tx.publisher = publisher;
    tx.round = round;
    tx.poisoned = poisoned;

    // A duplicate-parent transaction still appears once per approver in the
    // children index; the duplicate edge only matters for approval counting.
    children_[parents[0]].push_back(tx.id);
    if (parents[1] != parents[0]) {
      children_[parents[1]].push_back(tx.id);
    }
    remove_tip(parents[0]);
    remove_tip(parents[1]);
    tips_.push_back(tx.id);  // ids grow monotonically, so tips_ stays sorted
    children_.emplace_back();
    transactions_.push_back(std::move(tx));
    return transactions_.back().id;
  }

  const Transaction& tx(TransactionId id) const {
    check_known(id);
    return transactions_[id];
  }

  // Direct approvers in insertion order.
  const std::vector<TransactionId>& children(TransactionId id) const {
    check_known(id);
    return children_[id];
  }

  // Transitive closure over parent edges, excluding `id` itself.
  std::unordered_set<TransactionId> ancestors(TransactionId id) const {
    check_known(id);
    std::unordered_set<TransactionId> result;
    std::vector<TransactionId> stack(transactions_[id].parents.begin(),
                                     transactions_[id].parents.end());
    while (!stack.empty()) {
      const TransactionId current = stack.back();
      stack.pop_back();
      if (!result.insert(current).second) continue;
      const Transaction& t = transactions_[current];
      stack.insert(stack.end(), t.parents.begin(), t.parents.end());
    }
    result.erase(id);
    return result;
  }

  const std::vector<TransactionId>& tips() const { return tips_; }
  std::size_t size() const { return transactions_.size(); }
  TransactionId genesis() const { return 0; }
  const Transaction& genesis_tx() const { return transactions_.front(); }
  bool contains(TransactionId id) const { return id < transactions_.size(); }

  // Iteration over all transactions in insertion order.
  auto begin() const { return transactions_.begin(); }
  auto end() const { return transactions_.end(); }

  // JSON-lines export, one object per transaction. Params included only on
  // request (they dominate file size).
  void export_jsonl(std::ostream& out, bool include_params = false) const {
    for (const Transaction& t : transactions_) {
      nlohmann::json line{{"id", t.id},
                          {"parents", t.parents},
                          {"publisher", t.publisher},
                          {"round", t.round},
                          {"poisoned", t.poisoned}};
      if (include_params) {
        line["params"] = t.params.values;
      }
      out << line.dump() << '\n';
    }
  }

 private:
  Dag() = default;

  void check_known(TransactionId id) const {
    if (id >= transactions_.size()) {
      throw UnknownTransaction("unknown transaction id " + std::to_string(id));
    }
  }

  void remove_tip(TransactionId id) {
    const auto it = std::lower_bound(tips_.begin(), tips_.end(), id);
    if (it != tips_.end() && *it == id) {
      tips_.erase(it);
    }
  }

  std::deque<Transaction> transactions_;              // id == index
  std::vector<std::vector<TransactionId>> children_;  // reverse approval index
  std::vector<TransactionId> tips_;                   // ascending ids
};

}  // namespace dagfl
