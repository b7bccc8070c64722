#include "cyclebench/guard.hpp"

#include <algorithm>
#include <sstream>

namespace cyclebench {

std::string to_string(GuardAction action) {
    switch (action) {
        case GuardAction::deny: return "deny";
        case GuardAction::strip_directive: return "strip_directive";
        case GuardAction::terminate_session: return "terminate_session";
        case GuardAction::log_only: return "log_only";
    }
    return "?";
}

GuardAction guard_action_from_string(const std::string& s) {
    if (s == "deny") return GuardAction::deny;
    if (s == "strip_directive") return GuardAction::strip_directive;
    if (s == "terminate_session") return GuardAction::terminate_session;
    if (s == "log_only") return GuardAction::log_only;
    throw std::invalid_argument("unknown guard action '" + s + "'");
}

GuardPolicy GuardPolicy::unlimited() {
    GuardPolicy p;
    p.per_tool_call_cap = std::numeric_limits<std::int64_t>::max();
    p.token_budget = std::numeric_limits<std::int64_t>::max();
    p.action_on_detect = GuardAction::log_only;
    return p;
}

GuardPolicy GuardPolicy::from_json(const json& j) {
    GuardPolicy p;
    p.per_tool_call_cap = j.value("per_tool_call_cap", p.per_tool_call_cap);
    p.revisit_window = j.value("revisit_window", p.revisit_window);
    if (j.contains("action_on_detect"))
        p.action_on_detect =
            guard_action_from_string(j["action_on_detect"].get<std::string>());
    p.token_budget = j.value("token_budget", p.token_budget);
    if (p.per_tool_call_cap <= 0 || p.token_budget <= 0)
        throw std::invalid_argument("guard caps must be positive");
    if (p.revisit_window < 2)
        throw std::invalid_argument("revisit_window must be >= 2");
    return p;
}

json GuardPolicy::to_json() const {
    return {{"per_tool_call_cap", per_tool_call_cap},
            {"revisit_window", revisit_window},
            {"action_on_detect", to_string(action_on_detect)},
            {"token_budget", token_budget}};
}

std::string strip_directive_lines(const std::string& output) {
    std::istringstream in(output);
    std::string line;
    std::string out;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.find(kDirectivePrefix) != std::string::npos) continue;
        if (!first) out += '\n';
        out += line;
        first = false;
    }
    return out;
}

namespace {

bool within_window(const std::vector<std::string>& chain, const std::string& tool,
                   int window) {
    const std::size_t take = std::min<std::size_t>(chain.size(),
                                                   static_cast<std::size_t>(window));
    for (std::size_t i = chain.size() - take; i < chain.size(); ++i)
        if (chain[i] == tool) return true;
    return false;
}

} // namespace

Verdict inspect(std::span<const CallRecord> history, const std::string& proposed_tool,
                const std::optional<Directive>& proposed_directive,
                const GuardPolicy& policy) {
    std::int64_t count = 0;
    std::int64_t output_tokens = 0;
    std::vector<std::string> chain;
    for (const auto& rec : history) {
        if (rec.tool == proposed_tool) ++count;
        output_tokens += rec.output_tokens;
        const bool linked = rec.induced_by &&
                            rec.induced_by->source == Directive::Source::output &&
                            !chain.empty();
        if (!linked) chain.clear();
        chain.push_back(rec.tool);
    }

    if (count + 1 > policy.per_tool_call_cap)
        return {VerdictKind::deny, "per-tool call cap reached for " + proposed_tool};
    if (output_tokens >= policy.token_budget)
        return {VerdictKind::deny, "session token budget exhausted"};

    if (proposed_directive &&
        within_window(chain, proposed_tool, policy.revisit_window)) {
        const std::string reason =
            "directive-induced revisit of " + proposed_tool + " within window";
        switch (policy.action_on_detect) {
            case GuardAction::deny: return {VerdictKind::deny, reason};
            case GuardAction::strip_directive: return {VerdictKind::rewrite, reason};
            case GuardAction::terminate_session: return {VerdictKind::terminate, reason};
            case GuardAction::log_only: break;
        }
    }
    return {VerdictKind::allow, ""};
}

void GuardSession::before_call(const std::string& tool) {
    ++sequence_;
    const bool induced = expected_next_ && *expected_next_ == tool;
    pending_induced_ = induced;

    const auto record = [&](const char* verdict, const std::string& reason) {
        audit_.push_back({sequence_, tool, verdict, reason});
    };

    auto it = call_counts_.find(tool);
    const std::int64_t prior = it == call_counts_.end() ? 0 : it->second;
    if (prior + 1 > policy_.per_tool_call_cap) {
        expected_next_.reset();
        record("deny", "per-tool call cap reached");
        throw CallDenied("per-tool call cap reached for " + tool);
    }
    if (output_tokens_seen_ >= policy_.token_budget) {
        expected_next_.reset();
        record("deny", "session token budget exhausted");
        throw CallDenied("session token budget exhausted");
    }

    if (induced && within_window(chain_, tool, policy_.revisit_window)) {
        const std::string reason = "directive-induced revisit of " + tool;
        switch (policy_.action_on_detect) {
            case GuardAction::deny:
                expected_next_.reset();
                record("deny", reason);
                throw CallDenied(reason);
            case GuardAction::terminate_session:
                record("terminate", reason);
                throw SessionTerminated(reason);
            case GuardAction::strip_directive:
                // Directives toward revisits were already stripped from the
                // inducing output; an induced revisit can only appear here
                // if the window moved, so let it through.
            case GuardAction::log_only:
                record("allow", reason + " (log only)");
                return;
        }
    }
    record("allow", "");
}

std::string GuardSession::after_call(const std::string& tool, const std::string& output) {
    ++call_counts_[tool];
    output_tokens_seen_ += count_tokens(output);

    if (pending_induced_)
        chain_.push_back(tool);
    else
        chain_ = {tool};

    const auto d = parse_directive(output);
    if (!d) {
        expected_next_.reset();
        return output;
    }
    // Under strip_directive, a directive whose target would be a revisit is
    // removed before the agent ever sees it.
    if (policy_.action_on_detect == GuardAction::strip_directive &&
        within_window(chain_, d->target_tool, policy_.revisit_window)) {
        audit_.push_back({sequence_, tool, "rewrite",
                          "stripped directive toward " + d->target_tool});
        expected_next_.reset();
        return strip_directive_lines(output);
    }
    expected_next_ = d->target_tool;
    return output;
}

void GuardSession::record_failed_call(const std::string& tool) {
    ++call_counts_[tool];
    if (pending_induced_)
        chain_.push_back(tool);
    else
        chain_ = {tool};
    expected_next_.reset();
}

std::int64_t GuardSession::call_count(const std::string& tool) const {
    auto it = call_counts_.find(tool);
    return it == call_counts_.end() ? 0 : it->second;
}

namespace {

class GuardedServer : public ToolServer {
  public:
    GuardedServer(std::shared_ptr<ToolServer> inner, std::shared_ptr<GuardSession> session)
        : inner_(std::move(inner)), session_(std::move(session)) {}

    const std::string& server_name() const override { return inner_->server_name(); }
    std::vector<ToolDescriptor> list_tools() override { return inner_->list_tools(); }

    std::string call_tool(const std::string& name, const json& args) override {
        session_->before_call(name);
        try {
            const std::string output = inner_->call_tool(name, args);
            return session_->after_call(name, output);
        } catch (const ToolNotFound&) {
            session_->record_failed_call(name);
            throw;
        } catch (const InvalidArgs&) {
            session_->record_failed_call(name);
            throw;
        } catch (const ServerError&) {
            session_->record_failed_call(name);
            throw;
        }
    }

  private:
    std::shared_ptr<ToolServer> inner_;
    std::shared_ptr<GuardSession> session_;
};

} // namespace

GuardedRegistry guard_registry(const ToolRegistry& inner, const GuardPolicy& policy) {
    GuardedRegistry guarded;
    guarded.session = std::make_shared<GuardSession>(policy);
    guarded.registry.mode = inner.mode;
    guarded.registry.sample_seed = inner.sample_seed;

    std::map<ToolServer*, std::shared_ptr<ToolServer>> wrappers;
    for (const auto& entry : inner.entries) {
        RegistryEntry copy = entry;
        if (entry.route) {
            auto& wrapper = wrappers[entry.route.get()];
            if (!wrapper)
                wrapper = std::make_shared<GuardedServer>(entry.route, guarded.session);
            copy.route = wrapper;
        }
        guarded.registry.entries.push_back(std::move(copy));
    }
    return guarded;
}

json audit_json(const std::vector<GuardAuditRecord>& audit) {
    json out = json::array();
    for (const auto& a : audit)
        out.push_back({{"sequence", a.sequence},
                       {"tool", a.tool},
                       {"verdict", a.verdict},
                       {"reason", a.reason}});
    return out;
}

} // namespace cyclebench
