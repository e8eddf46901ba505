// Thin fetch client for the /api/v1 surface. No business rules live here:
// the server is the single authority, the client only relays.

import type {EditJson, EntityJson, FeatureCollectionJson, ParsedDate,
             PredicateJson, RowJson, SchemaJson} from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, public code: string, message: string,
              public details?: unknown) {
    super(message);
  }
}

export class Api {
  token: string | null = null;

  constructor(public baseUrl: string = "") {}

  private async request(method: string, path: string, body?: unknown,
                        raw = false): Promise<any> {
    const headers: {[k: string]: string} = {};
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    let payload: string | undefined;
    if (body !== undefined) {
      if (typeof body === "string") {
        payload = body;
        headers["Content-Type"] = "application/xml";
      } else {
        payload = JSON.stringify(body);
        headers["Content-Type"] = "application/json";
      }
    }
    const response = await fetch(this.baseUrl + path, {method, headers, body: payload});
    if (!response.ok) {
      let code = "error", message = response.statusText, details: unknown;
      try {
        const parsed = await response.json();
        code = parsed.code ?? code;
        message = parsed.message ?? message;
        details = parsed.details;
      } catch { /* non-JSON error body */ }
      throw new ApiError(response.status, code, message, details);
    }
    return raw ? response.text() : response.json();
  }

  async login(user: string, password: string): Promise<{id: string; name: string;
      role: string; org: string | null}> {
    const out = await this.request("POST", "/api/v1/login", {user, password});
    this.token = out.token;
    return out.user;
  }

  listTypes(): Promise<{name: string; version: number; summaryColumns: string[]}[]> {
    return this.request("GET", "/api/v1/types");
  }

  schema(typeName: string): Promise<SchemaJson> {
    return this.request("GET", `/api/v1/types/${typeName}/schema.json`);
  }

  rows(typeName: string, filter = ""): Promise<RowJson[]> {
    const suffix = filter ? `?filter=${encodeURIComponent(filter)}` : "";
    return this.request("GET", `/api/v1/${typeName}/rows${suffix}`);
  }

  entity(id: string): Promise<EntityJson> {
    return this.request("GET", `/api/v1/entities/${id}`);
  }

  createEntity(typeName: string): Promise<EntityJson> {
    return this.request("POST", `/api/v1/${typeName}`, {});
  }

  edit(id: string, expectedRevision: number,
       edits: EditJson[]): Promise<{id: string; revision: number}> {
    return this.request("PUT", `/api/v1/entities/${id}`,
                        {expectedRevision, edits});
  }

  transition(id: string, target: string): Promise<{status: string}> {
    return this.request("POST", `/api/v1/entities/${id}/status`, {target});
  }

  backlinks(id: string): Promise<{referrer: string; path: string}[]> {
    return this.request("GET", `/api/v1/entities/${id}/backlinks`);
  }

  parseDate(expr: string): Promise<ParsedDate> {
    return this.request("GET", `/api/v1/parse-date?expr=${encodeURIComponent(expr)}`);
  }

  advancedSearch(typeName: string,
                 predicates: PredicateJson[]): Promise<{ids: string[]}> {
    return this.request("POST", `/api/v1/${typeName}/query`, {predicates});
  }

  keywordSearch(q: string): Promise<{id: string; score: number}[]> {
    return this.request("GET", `/api/v1/search?q=${encodeURIComponent(q)}`);
  }

  saveQuery(name: string, typeName: string, predicates: PredicateJson[],
            shared: boolean): Promise<{id: string; name: string}> {
    return this.request("POST", "/api/v1/queries",
                        {name, type: typeName, predicates, shared});
  }

  listQueries(): Promise<{id: string; name: string; type: string;
      predicates: PredicateJson[]; shared: boolean}[]> {
    return this.request("GET", "/api/v1/queries");
  }

  runQuery(id: string): Promise<{ids: string[]}> {
    return this.request("POST", `/api/v1/queries/${id}/run`);
  }

  mapFeatures(ids: string[]): Promise<FeatureCollectionJson> {
    return this.request("GET", `/api/v1/map?ids=${ids.join(",")}`);
  }

  listVocabularies(): Promise<{id: string; name: string; mode: string;
      terms: number}[]> {
    return this.request("GET", "/api/v1/vocab");
  }

  vocabulary(id: string): Promise<{id: string; name: string; mode: string;
      terms: {id: string; labels: {[lang: string]: string};
              deprecated: boolean}[]}> {
    return this.request("GET", `/api/v1/vocab/${id}`);
  }

  addTerm(vocabId: string, label: string,
          lang = "en"): Promise<{id: string; created: boolean}> {
    return this.request("POST", `/api/v1/vocab/${vocabId}/terms`, {label, lang});
  }

  duplicateCandidates(vocabId: string): Promise<{clusters: string[][]}> {
    return this.request("GET", `/api/v1/vocab/${vocabId}/duplicates`);
  }

  mergeTerms(vocabId: string, winner: string, losers: string[]):
      Promise<{winner: string; deprecated: string[]; documents: string[]}> {
    return this.request("POST", `/api/v1/vocab/${vocabId}/merge`,
                        {winner, losers});
  }

  gazetteer(name: string, source: string): Promise<{source: string; id: string;
      name: string; lat: number; lon: number; kind: string}[]> {
    return this.request(
      "GET",
      `/api/v1/gazetteer?name=${encodeURIComponent(name)}&source=${source}`);
  }

  exportEntity(id: string, format: string): Promise<string> {
    return this.request("GET", `/api/v1/entities/${id}/export?format=${format}`,
                        undefined, true);
  }

  importEntity(xml: string, mode = "strict"): Promise<{id: string;
      dangling: {path: string; target: string}[]}> {
    return this.request("POST", `/api/v1/import?mode=${mode}`, xml);
  }
}
