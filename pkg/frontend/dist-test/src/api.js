// Thin fetch client for the /api/v1 surface. No business rules live here:
// the server is the single authority, the client only relays.
export class ApiError extends Error {
    status;
    code;
    details;
    constructor(status, code, message, details) {
        super(message);
        this.status = status;
        this.code = code;
        this.details = details;
    }
}
export class Api {
    baseUrl;
    token = null;
    constructor(baseUrl = "") {
        this.baseUrl = baseUrl;
    }
    async request(method, path, body, raw = false) {
        const headers = {};
        if (this.token)
            headers["Authorization"] = `Bearer ${this.token}`;
        let payload;
        if (body !== undefined) {
            if (typeof body === "string") {
                payload = body;
                headers["Content-Type"] = "application/xml";
            }
            else {
                payload = JSON.stringify(body);
                headers["Content-Type"] = "application/json";
            }
        }
        const response = await fetch(this.baseUrl + path, { method, headers, body: payload });
        if (!response.ok) {
            let code = "error", message = response.statusText, details;
            try {
                const parsed = await response.json();
                code = parsed.code ?? code;
                message = parsed.message ?? message;
                details = parsed.details;
            }
            catch { /* non-JSON error body */ }
            throw new ApiError(response.status, code, message, details);
        }
        return raw ? response.text() : response.json();
    }
    async login(user, password) {
        const out = await this.request("POST", "/api/v1/login", { user, password });
        this.token = out.token;
        return out.user;
    }
    listTypes() {
        return this.request("GET", "/api/v1/types");
    }
    schema(typeName) {
        return this.request("GET", `/api/v1/types/${typeName}/schema.json`);
    }
    rows(typeName, filter = "") {
        const suffix = filter ? `?filter=${encodeURIComponent(filter)}` : "";
        return this.request("GET", `/api/v1/${typeName}/rows${suffix}`);
    }
    entity(id) {
        return this.request("GET", `/api/v1/entities/${id}`);
    }
    createEntity(typeName) {
        return this.request("POST", `/api/v1/${typeName}`, {});
    }
    edit(id, expectedRevision, edits) {
        return this.request("PUT", `/api/v1/entities/${id}`, { expectedRevision, edits });
    }
    transition(id, target) {
        return this.request("POST", `/api/v1/entities/${id}/status`, { target });
    }
    backlinks(id) {
        return this.request("GET", `/api/v1/entities/${id}/backlinks`);
    }
    parseDate(expr) {
        return this.request("GET", `/api/v1/parse-date?expr=${encodeURIComponent(expr)}`);
    }
    advancedSearch(typeName, predicates) {
        return this.request("POST", `/api/v1/${typeName}/query`, { predicates });
    }
    keywordSearch(q) {
        return this.request("GET", `/api/v1/search?q=${encodeURIComponent(q)}`);
    }
    saveQuery(name, typeName, predicates, shared) {
        return this.request("POST", "/api/v1/queries", { name, type: typeName, predicates, shared });
    }
    listQueries() {
        return this.request("GET", "/api/v1/queries");
    }
    runQuery(id) {
        return this.request("POST", `/api/v1/queries/${id}/run`);
    }
    mapFeatures(ids) {
        return this.request("GET", `/api/v1/map?ids=${ids.join(",")}`);
    }
    listVocabularies() {
        return this.request("GET", "/api/v1/vocab");
    }
    vocabulary(id) {
        return this.request("GET", `/api/v1/vocab/${id}`);
    }
    addTerm(vocabId, label, lang = "en") {
        return this.request("POST", `/api/v1/vocab/${vocabId}/terms`, { label, lang });
    }
    duplicateCandidates(vocabId) {
        return this.request("GET", `/api/v1/vocab/${vocabId}/duplicates`);
    }
    mergeTerms(vocabId, winner, losers) {
        return this.request("POST", `/api/v1/vocab/${vocabId}/merge`, { winner, losers });
    }
    gazetteer(name, source) {
        return this.request("GET", `/api/v1/gazetteer?name=${encodeURIComponent(name)}&source=${source}`);
    }
    exportEntity(id, format) {
        return this.request("GET", `/api/v1/entities/${id}/export?format=${format}`, undefined, true);
    }
    importEntity(xml, mode = "strict") {
        return this.request("POST", `/api/v1/import?mode=${mode}`, xml);
    }
}
