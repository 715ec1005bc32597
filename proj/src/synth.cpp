#include "rca/synth.hpp"

#include <array>
#include <chrono>
#include <cstdio>
#include <string>
#include <string_view>

#include "rca/util.hpp"

namespace rca::synth {

namespace {

struct Family {
    std::array<std::string_view, 2> titles;
    std::array<std::string_view, 3> symptoms;  // {svc} and {region} are substituted
    std::string_view root_cause;               // two sentences
};

// clang-format off
constexpr std::array<Family, kFamilyCount> kFamilies{{
    {{"DNS lookups failing for {svc} in {region}", "NXDOMAIN responses from resolver for {svc}"},
     {"Clients of {svc} in {region} received NXDOMAIN answers from the regional resolver.",
      "Name resolution for private endpoints timed out while the resolver cache was cold.",
      "Resolver query latency rose above two seconds for internal zones."},
     "A stale delegation record in the private DNS zone pointed at decommissioned resolvers. "
     "Lookups for internal endpoints fell through to the public resolver and returned NXDOMAIN."},
    {{"TLS handshake errors on {svc} endpoint", "Certificate validation failing for {svc} in {region}"},
     {"Callers of {svc} in {region} saw TLS handshake failures with certificate expired alerts.",
      "Browsers reported an untrusted certificate chain for the public listener.",
      "Handshake error counters spiked on every frontend node at the same minute."},
     "The frontend TLS certificate expired because the renewal job lacked permission on the key vault. "
     "Nodes kept serving the expired certificate until a manual rotation."},
    {{"Disk full on {svc} log volume", "Writes failing with no space left on {svc} nodes"},
     {"Nodes of {svc} in {region} reported no space left on device for the log partition.",
      "Request handlers blocked on log flush and queued writes piled up.",
      "Volume usage alerts fired at ninety eight percent across the scale set."},
     "Verbose debug logging was left enabled after an investigation and filled the log partition. "
     "Log rotation could not reclaim space because compressed archives were never pruned."},
    {{"{svc} workers killed by out of memory", "Memory growth and OOM restarts in {svc}"},
     {"Worker processes of {svc} in {region} were repeatedly killed by the kernel OOM killer.",
      "Resident memory climbed steadily for hours before each restart.",
      "Heap snapshots showed millions of retained session objects."},
     "A session cache introduced in the last release never evicted entries and leaked heap memory. "
     "Workers exhausted their memory limit and the kernel terminated them."},
    {{"Feature flag rollout broke {svc} checkout", "Errors after flag change on {svc} in {region}"},
     {"Checkout requests on {svc} in {region} failed right after a feature flag change.",
      "The error rate followed the flag rollout percentage closely.",
      "Rolling the flag back restored normal behaviour within minutes."},
     "A feature flag enabled an unfinished pricing path that threw on missing currency data. "
     "The flag targeting rules were applied to production instead of the canary ring."},
    {{"Deadlocks in {svc} order database", "{svc} transactions aborted by deadlock victim errors"},
     {"Transactions on the {svc} database in {region} were aborted as deadlock victims.",
      "Lock wait graphs showed two procedures acquiring rows in opposite order.",
      "Order submissions retried until clients gave up."},
     "Two stored procedures updated the orders and inventory tables in opposite lock order. "
     "Concurrent checkouts produced deadlock cycles that aborted transactions."},
    {{"Connection pool exhausted in {svc}", "{svc} timing out waiting for database connections"},
     {"Requests to {svc} in {region} timed out waiting for a pooled database connection.",
      "Pool metrics showed all connections checked out and none returned.",
      "Thread dumps showed handlers parked on pool acquisition."},
     "A code path leaked database connections by skipping dispose on an exception branch. "
     "The pool drained and new requests blocked until the acquisition timeout."},
    {{"Throttling responses from storage for {svc}", "{svc} receiving HTTP 429 from quota service"},
     {"Calls from {svc} in {region} to blob storage returned HTTP 429 throttling responses.",
      "Retry storms multiplied request volume against the throttled account.",
      "Quota dashboards showed the subscription at its ingress limit."},
     "A batch export job exceeded the storage account request quota shared with live traffic. "
     "Aggressive client retries without backoff amplified the throttling."},
    {{"Packet loss between {region} datacenters", "Cross region latency for {svc} replication"},
     {"Replication traffic for {svc} between {region} sites suffered heavy packet loss.",
      "Traceroutes showed a route flapping across an edge router.",
      "Cross site latency rose from five to three hundred milliseconds."},
     "A BGP route advertisement from a misconfigured edge router withdrew the preferred path. "
     "Traffic shifted to a congested backup link with heavy packet loss."},
    {{"Load balancer marking {svc} backends unhealthy", "Health probe failures for {svc} pool"},
     {"The load balancer in {region} marked every {svc} backend unhealthy at once.",
      "Health probe requests hit a path that now requires authentication.",
      "Backends themselves served user traffic without errors."},
     "The health probe path was moved behind authentication in a routing change. "
     "Probes received HTTP 401 and the balancer removed all backends from rotation."},
    {{"Redis cache evictions spike for {svc}", "Cache stampede overloads {svc} database"},
     {"Cache hit ratio for {svc} in {region} dropped from ninety percent to almost zero.",
      "The redis cluster evicted hot keys under memory pressure.",
      "Database CPU saturated as every miss went to the primary store."},
     "The redis instance was downsized during a cost review and began evicting hot keys. "
     "Simultaneous misses stampeded the database without request coalescing."},
    {{"Token validation failures on {svc} hosts", "Clock drift rejects signed requests to {svc}"},
     {"Hosts of {svc} in {region} rejected signed tokens as not yet valid.",
      "System clocks on a subset of hosts were several minutes ahead.",
      "Only nodes from one hardware batch showed the symptom."},
     "The NTP daemon was disabled on a hardware batch by a faulty image update. "
     "Clock drift pushed token validation outside the allowed skew window."},
    {{"Kafka consumer lag growing on {svc}", "{svc} event backlog delays notifications"},
     {"Consumer lag for the {svc} topic in {region} grew to millions of messages.",
      "Partition rebalances repeated every few seconds.",
      "Downstream notifications arrived hours late."},
     "Consumers exceeded the poll interval while processing large batches and were evicted from the group. "
     "Constant rebalancing stalled partition consumption and the backlog grew."},
    {{"NullReferenceException after {svc} deployment", "{svc} API returning 500 after release"},
     {"The {svc} API in {region} returned HTTP 500 immediately after the new build rolled out.",
      "Logs showed an unhandled null reference in the request mapper.",
      "Requests from older client versions failed while newer clients worked."},
     "The new build assumed an optional header that older clients never send and dereferenced null. "
     "The regression was missed because integration coverage only used the newest client."},
    {{"Storage authentication errors for {svc}", "{svc} cannot read blobs after key rotation"},
     {"Reads from blob storage by {svc} in {region} failed with authentication errors.",
      "The failures began right after scheduled credential rotation.",
      "Services reading through managed identity were unaffected."},
     "Storage account keys were rotated while {svc} still cached the previous key in its settings. "
     "The deployment pipeline did not propagate the new secret to the running instances."},
    {{"CPU throttling slows {svc} containers", "{svc} latency from noisy neighbour pods"},
     {"Containers of {svc} in {region} hit CPU throttling and request latency tripled.",
      "A colocated analytics pod consumed every available core.",
      "Throttled periods in cgroup stats climbed sharply."},
     "A batch analytics pod without CPU limits was scheduled onto the same nodes. "
     "It starved neighbouring containers and caused sustained cgroup throttling."},
    {{"Firewall rule blocks {svc} traffic", "Network security group denies port for {svc}"},
     {"Connections from {svc} in {region} to its queue endpoint were refused.",
      "Flow logs showed packets dropped by a deny rule.",
      "The change window included a firewall policy update."},
     "A network security group update added a deny rule that blocked the messaging port. "
     "The policy template had the wrong priority for the allow rule."},
    {{"Schema migration locks {svc} tables", "{svc} writes blocked during database migration"},
     {"Writes to the {svc} database in {region} hung for twenty minutes.",
      "A long running migration held an exclusive table lock.",
      "Read replicas fell behind while the lock was held."},
     "An online schema migration rebuilt an index without the concurrent option and took an exclusive lock. "
     "All writes to the table waited behind the migration."},
    {{"SDK upgrade breaks serialization in {svc}", "{svc} failing to parse payloads after dependency bump"},
     {"After a dependency upgrade {svc} in {region} failed to deserialize stored payloads.",
      "The new serializer rejected enum values written by the previous version.",
      "Only records created before the upgrade were affected."},
     "A minor SDK version bump changed the default enum serialization from numbers to strings. "
     "Existing payloads written with numeric enums no longer parsed."},
    {{"Autoscaler shrinks {svc} below demand", "{svc} capacity collapses during peak"},
     {"The autoscaler scaled {svc} in {region} down to one instance during peak traffic.",
      "Queue depth metrics were missing from the scaling rule inputs.",
      "Capacity recovered only after the minimum count was raised by hand."},
     "The autoscale profile had its minimum instance count set to one by a template default. "
     "The scale rule watched an idle metric and removed capacity under load."},
}};
// clang-format on

constexpr std::array<std::string_view, 6> kServices{
    "billing-api", "identity-gateway", "storage-frontend", "search-indexer", "notification-hub",
    "orders-service"};
constexpr std::array<std::string_view, 4> kRegions{"eastus", "westeurope", "southeastasia",
                                                   "centralus"};
constexpr std::array<std::string_view, 4> kFollowUps{
    "The on-call engineer confirmed the impact from the service dashboard.",
    "Customer support opened several tickets during the window.",
    "Mitigation was verified by watching error rates return to baseline.",
    "A follow up work item was filed with the owning team."};
constexpr std::array<std::string_view, 3> kRootCauseNotes{
    "Repair items were tracked in the postmortem.", "The owning team added an alert for this condition.",
    "A regression check now covers the scenario."};

constexpr std::string_view kBase64Alphabet =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string substitute(std::string_view text, std::string_view svc, std::string_view region) {
    std::string out;
    for (std::size_t i = 0; i < text.size();) {
        if (text.substr(i, 5) == "{svc}") {
            out += svc;
            i += 5;
        } else if (text.substr(i, 8) == "{region}") {
            out += region;
            i += 8;
        } else {
            out += text[i++];
        }
    }
    return out;
}

std::string stack_frame(Rng& rng, std::string_view svc) {
    static constexpr std::array<std::string_view, 4> kClasses{"Handler", "Dispatcher", "Repository",
                                                              "RetryPolicy"};
    static constexpr std::array<std::string_view, 4> kMethods{"process", "invoke", "execute", "send"};
    std::string pkg(svc);
    for (auto& c : pkg)
        if (c == '-') c = '_';
    const auto& cls = kClasses[rng.below(kClasses.size())];
    std::string line = "   at com.contoso." + pkg + "." + std::string(cls) + "." +
                       std::string(kMethods[rng.below(kMethods.size())]) + "(" + std::string(cls) +
                       ".java:" + std::to_string(10 + rng.below(400)) + ")";
    return line;
}

std::string base64_blob(Rng& rng, std::size_t length) {
    std::string blob;
    for (std::size_t i = 0; i < length; ++i) blob += kBase64Alphabet[rng.below(kBase64Alphabet.size())];
    return blob;
}

}  // namespace

std::vector<SynthIncident> generate(const SynthConfig& config) {
    if (config.families == 0 || config.families > kFamilyCount)
        fail(ErrorKind::InvalidArgument, "family count must be between 1 and " +
                                             std::to_string(kFamilyCount));
    if (config.incidents == 0) fail(ErrorKind::InvalidArgument, "incident count must be positive");

    Rng rng(config.seed);
    using namespace std::chrono;
    const Timestamp base = sys_days{year{2023} / January / 2} + hours{0};
    std::vector<SynthIncident> out;
    out.reserve(config.incidents);

    std::vector<std::size_t> round_order(config.families);
    for (std::size_t slot = 0; slot < config.incidents; ++slot) {
        if (slot % config.families == 0) {
            for (std::size_t f = 0; f < config.families; ++f) round_order[f] = f;
            rng.shuffle(round_order);
        }
        const std::size_t f = round_order[slot % config.families];
        const Family& fam = kFamilies[f];
        const auto svc = kServices[rng.below(kServices.size())];
        const auto region = kRegions[rng.below(kRegions.size())];

        SynthIncident s;
        s.family = f;
        Incident& inc = s.incident;
        char id[32];
        std::snprintf(id, sizeof id, "INC-%05zu", 10000 + slot * 3 + rng.below(3));
        inc.id = id;
        inc.title = substitute(fam.titles[rng.below(2)], svc, region);

        std::string summary = substitute(fam.symptoms[0], svc, region);
        if (rng.uniform() < config.stack_trace_rate) {
            s.injected_frames = 3 + rng.below(4);
            for (std::size_t k = 0; k < s.injected_frames; ++k) summary += "\n" + stack_frame(rng, svc);
        }
        summary += "\n" + substitute(fam.symptoms[1], svc, region);
        if (rng.uniform() < config.image_rate) {
            s.injected_images = 1;
            const auto blob = base64_blob(rng, 600 + rng.below(400));
            if (rng.below(2) == 0)
                summary += " See screenshot <img src=\"data:image/png;base64," + blob + "\" alt=\"graph\">";
            else
                summary += " Attached dump " + blob;
        }
        if (rng.below(2) == 0) summary += "\n" + substitute(fam.symptoms[2], svc, region);
        summary += "\n" + std::string(kFollowUps[rng.below(kFollowUps.size())]);
        inc.summary_raw = summary;

        inc.root_cause_raw = substitute(fam.root_cause, svc, region);
        if (rng.below(2) == 0) inc.root_cause_raw += " " + std::string(kRootCauseNotes[rng.below(3)]);

        inc.severity = static_cast<int>(rng.below(5));
        inc.status = rng.below(4) == 0 ? IncidentStatus::Mitigated : IncidentStatus::Resolved;
        inc.created_at = base + hours{6 * slot} + minutes{rng.below(300)};
        inc.owning_service = std::string(svc);
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<Incident> generate_incidents(const SynthConfig& config) {
    std::vector<Incident> out;
    for (auto& s : generate(config)) out.push_back(std::move(s.incident));
    return out;
}

}  // namespace rca::synth
