#pragma once
// Structural defense proxy between agent and registry. The guard never
// reads tool output content except the canonical directive line: it infers
// directive-induced calls the same way the agent does, denies or rewrites
// revisits inside the active chain, and enforces per-tool and token caps.

#include "cyclebench/agent.hpp"

#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cyclebench {

enum class GuardAction { deny, strip_directive, terminate_session, log_only };

std::string to_string(GuardAction action);
GuardAction guard_action_from_string(const std::string& s);

struct GuardPolicy {
    std::int64_t per_tool_call_cap = 8;
    int revisit_window = 16;  // >= 2
    GuardAction action_on_detect = GuardAction::deny;
    std::int64_t token_budget = std::numeric_limits<std::int64_t>::max();

    // Passthrough policy: infinite caps, detections logged but not acted on.
    static GuardPolicy unlimited();
    static GuardPolicy from_json(const json& j);
    json to_json() const;
};

enum class VerdictKind { allow, deny, rewrite, terminate };

struct Verdict {
    VerdictKind kind = VerdictKind::allow;
    std::string reason;
};

// Pure policy check over a trace prefix: would `proposed` (with an optional
// inducing directive) be allowed after `history`? Used directly by tests;
// GuardSession implements the same conditions incrementally.
Verdict inspect(std::span<const CallRecord> history, const std::string& proposed_tool,
                const std::optional<Directive>& proposed_directive,
                const GuardPolicy& policy);

struct GuardAuditRecord {
    int sequence = 0;
    std::string tool;
    std::string verdict;  // allow | deny | rewrite | terminate
    std::string reason;
};

// Per-session guard state shared by every wrapped route of one registry.
class GuardSession {
  public:
    explicit GuardSession(GuardPolicy policy) : policy_(policy) {}

    // Pre-call check; throws CallDenied / SessionTerminated per policy.
    void before_call(const std::string& tool);
    // Post-call bookkeeping; returns the output, rewritten when the policy
    // strips directives that would induce a revisit.
    std::string after_call(const std::string& tool, const std::string& output);
    // A call that reached the server but raised: counts toward the cap,
    // breaks the expected-directive chain.
    void record_failed_call(const std::string& tool);

    const GuardPolicy& policy() const { return policy_; }
    const std::vector<GuardAuditRecord>& audit() const { return audit_; }
    std::int64_t call_count(const std::string& tool) const;

  private:
    GuardPolicy policy_;
    std::map<std::string, std::int64_t> call_counts_;
    std::vector<std::string> chain_;  // directive-linked chain, newest last
    std::optional<std::string> expected_next_;
    bool pending_induced_ = false;
    std::int64_t output_tokens_seen_ = 0;
    int sequence_ = 0;
    std::vector<GuardAuditRecord> audit_;
};

// Same descriptors, same modes; every call passes through one shared
// GuardSession. The inner registry is not modified.
struct GuardedRegistry {
    ToolRegistry registry;
    std::shared_ptr<GuardSession> session;
};

GuardedRegistry guard_registry(const ToolRegistry& inner, const GuardPolicy& policy);

// Strips every canonical directive line from `output`.
std::string strip_directive_lines(const std::string& output);

json audit_json(const std::vector<GuardAuditRecord>& audit);

} // namespace cyclebench
