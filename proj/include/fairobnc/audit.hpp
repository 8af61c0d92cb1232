#pragma once

#include "fairobnc/dataset.hpp"
#include "fairobnc/ensemble.hpp"

namespace fairobnc {

// Probe AUCs for predicting group membership and split membership from the
// features. Values near 0.5 indicate the column carries no feature signal,
// which is what make_iid is meant to guarantee.
struct IidAudit {
  double group_auc = 0.5;
  double split_auc = 0.5;
};

IidAudit audit_iid(const Dataset& ds);
IidAudit audit_iid(const Dataset& ds, const EnsembleParams& probe);

}  // namespace fairobnc
