// Single-page client: entity tables with live filtering, the documentation
// card in view/edit mode, advanced search, saved queries, vocabulary
// administration (for accounts with the right), and the map panel.
// Every rule lives server-side; this file only arranges widgets.
import { Api, ApiError } from "./api.js";
import { addInstance, applyLocalEdit, newCardViewState, renderCardTree, savePayload, toggleExpansion, xmlMap } from "./cardTree.js";
import { clear, el } from "./dom.js";
import { buildMapModel, renderMapSvg } from "./mapView.js";
import { buildQuery, operatorsFor, queryableFields } from "./queryBuilder.js";
import { filterRows } from "./tableFilter.js";
import { validateTimeExpression } from "./timeField.js";
const api = new Api("");
let session = null;
let currentType = "Object";
const root = () => document.querySelector("#app");
function statusLine(message, isError = false) {
    return el("p", { class: isError ? "status error" : "status" }, message);
}
async function guard(work) {
    try {
        return await work();
    }
    catch (error) {
        const message = error instanceof ApiError
            ? `${error.code}: ${error.message}` : String(error);
        const banner = document.querySelector("#banner");
        if (banner) {
            clear(banner).append(statusLine(message, true));
        }
        return null;
    }
}
// ---- login ------------------------------------------------------------------
function renderLogin() {
    const user = el("input", { placeholder: "user id" });
    const password = el("input", { type: "password", placeholder: "password" });
    const form = el("form", {
        class: "login",
        onsubmit: async (event) => {
            event.preventDefault();
            const logged = await guard(() => api.login(user.value, password.value));
            if (logged) {
                session = logged;
                renderShell();
            }
        },
    }, el("h1", {}, "Scriptorium"), user, password, el("button", { type: "submit" }, "Sign in"), el("div", { id: "banner" }));
    clear(root()).append(form);
}
// ---- application shell -----------------------------------------------------------
async function renderShell() {
    const types = await guard(() => api.listTypes());
    if (!types)
        return;
    const menu = el("nav", { class: "menu" });
    for (const t of types) {
        menu.append(el("button", {
            class: t.name === currentType ? "active" : "",
            onclick: () => { currentType = t.name; renderShell(); },
        }, t.name));
    }
    const tools = el("div", { class: "tools" }, el("button", { onclick: () => renderSearchPanel() }, "Advanced search"), el("button", { onclick: () => renderMapPanel() }, "Map"), el("span", { class: "whoami" }, `${session?.name} (${session?.role})`));
    if (session && (session.role === "org-admin" || session.role === "system-admin")) {
        tools.prepend(el("button", { onclick: () => renderVocabAdmin() }, "Vocabularies"));
    }
    const content = el("main", { id: "content" });
    clear(root()).append(el("div", { id: "banner" }), menu, tools, content);
    await renderTable();
}
// ---- entity table ------------------------------------------------------------------
async function renderTable() {
    const content = document.querySelector("#content");
    const rows = await guard(() => api.rows(currentType));
    const schema = await guard(() => api.schema(currentType));
    if (!rows || !schema)
        return;
    const filterInput = el("input", { placeholder: "filter the table" });
    const tableWrap = el("div", {});
    const draw = (visible) => {
        const header = el("tr", {}, el("th", {}, "id"), ...schema.summaryColumns.map(c => el("th", {}, c.split("/").pop() ?? c)), el("th", {}, "status"), el("th", {}, "creator"), el("th", {}, ""));
        const table = el("table", { class: "rows" }, header);
        for (const row of visible) {
            table.append(el("tr", {}, el("td", {}, row.id), ...schema.summaryColumns.map(c => el("td", {}, row.cells[c] ?? "")), el("td", {}, row.status), el("td", {}, row.creator), el("td", {}, el("button", { onclick: () => renderCard(row.id, "view") }, "view"), el("button", { onclick: () => renderCard(row.id, "edit") }, "edit"))));
        }
        clear(tableWrap).append(table);
    };
    filterInput.addEventListener("input", () => draw(filterRows(rows, filterInput.value)));
    draw(rows);
    clear(content).append(el("h2", {}, currentType), el("div", { class: "table-tools" }, filterInput, el("button", { onclick: async () => {
            const doc = await guard(() => api.createEntity(currentType));
            if (doc)
                renderCard(doc.id, "edit");
        } }, "create new")), tableWrap);
}
// ---- documentation card ------------------------------------------------------------
function widgetFor(node, state) {
    const current = state.dirtyEdits.find(e => e.path === node.path)?.value
        ?? node.value;
    const wrap = el("span", { class: "widget" });
    const buffer = (value) => applyLocalEdit(state, node.path, value);
    if (node.widget === "time-input") {
        const input = el("input", { value: current?.kind === "time" ? current.expr : "" });
        const verdict = el("span", { class: "time-verdict" });
        input.addEventListener("input", async () => {
            const expr = input.value.trim();
            if (!expr) {
                verdict.textContent = "";
                return;
            }
            const result = await validateTimeExpression(api, expr);
            verdict.textContent = result.ok ? result.display : result.message;
            verdict.className = result.ok ? "time-verdict ok" : "time-verdict error";
            if (result.ok)
                buffer({ kind: "time", expr });
        });
        wrap.append(input, verdict);
    }
    else if (node.widget === "number-input") {
        const input = el("input", { type: "number",
            value: current?.kind === "number" ? current.value : "" });
        input.addEventListener("change", () => buffer(input.value ? { kind: "number", value: input.value } : null));
        wrap.append(input);
    }
    else if (node.widget === "term-picker") {
        const input = el("input", { value: current?.kind === "term" ? current.label : "",
            placeholder: node.vocab ?? "" });
        input.addEventListener("change", async () => {
            if (!input.value || !node.vocab)
                return;
            // dynamic vocabularies take new terms right here; an existing label
            // comes back with created=false and its id
            const term = await guard(() => api.addTerm(node.vocab, input.value));
            if (term)
                buffer({ kind: "term", vocab: node.vocab, id: term.id,
                    label: input.value });
        });
        wrap.append(input);
    }
    else if (node.widget === "gazetteer-picker") {
        const input = el("input", { placeholder: "place name",
            value: current?.kind === "place" ? current.id : "" });
        const hits = el("span", {});
        input.addEventListener("change", async () => {
            const records = await guard(() => api.gazetteer(input.value, "tgn"));
            if (!records || !records.length) {
                hits.textContent = "no matches";
                return;
            }
            clear(hits);
            for (const record of records.slice(0, 5)) {
                hits.append(el("button", { onclick: () => {
                        buffer({ kind: "place", source: record.source, id: record.id,
                            lat: record.lat, lon: record.lon });
                        hits.textContent = `${record.name} (${record.source}:${record.id})`;
                    } }, `${record.name} ${record.lat},${record.lon}`));
            }
        });
        wrap.append(input, hits);
    }
    else if (node.widget === "richtext-editor") {
        const area = el("textarea", {}, current?.kind === "richtext" ? current.markup : "");
        area.addEventListener("change", () => buffer(area.value ? { kind: "richtext", markup: area.value } : null));
        wrap.append(area);
    }
    else { // text-input, entity-picker, concept-picker, map-picker, file-upload
        const input = el("input", { value: current ? renderValue(current) : "" });
        input.addEventListener("change", () => buffer(input.value ? { kind: "text", text: input.value } : null));
        wrap.append(input);
    }
    return wrap;
}
function renderValue(value) {
    switch (value.kind) {
        case "text": return value.text;
        case "richtext": return value.markup;
        case "number": return value.value;
        case "term":
        case "concept":
        case "link": return value.label;
        case "time": return value.expr;
        case "geo": return value.points.map(p => p.join(",")).join(";");
        case "place": return `${value.source}:${value.id}`;
        case "file": return value.ref;
    }
}
async function renderCard(entityId, mode) {
    const doc = await guard(() => api.entity(entityId));
    if (!doc)
        return;
    const schema = await guard(() => api.schema(doc.type));
    const backlinks = await guard(() => api.backlinks(entityId));
    if (!schema || !backlinks)
        return;
    const state = newCardViewState(doc, mode);
    drawCard(doc, schema, state, backlinks);
}
function drawCard(doc, schema, state, backlinks) {
    const content = document.querySelector("#content");
    const tree = renderCardTree(doc, schema, state, backlinks);
    const renderNodes = (nodes) => {
        const list = el("ul", { class: "card-tree" });
        for (const node of nodes) {
            if (node.kind === "group") {
                const item = el("li", { class: node.expanded ? "group open" : "group" });
                item.append(el("button", { class: "twisty", onclick: () => {
                        toggleExpansion(state, node.path);
                        drawCard(doc, schema, state, backlinks);
                    } }, (node.expanded ? "▾ " : "▸ ") + node.path.split("/").pop()));
                if (node.canAddInstance) {
                    item.append(el("button", { class: "add-instance", onclick: () => {
                            addInstance(doc, schema, state, node.path);
                            drawCard(doc, schema, state, backlinks);
                        } }, "+"));
                }
                if (node.expanded)
                    item.append(renderNodes(node.children));
                list.append(item);
            }
            else {
                const item = el("li", { class: "field" }, el("span", { class: "label" }, node.label));
                if (state.mode === "edit") {
                    item.append(widgetFor(node, state));
                }
                else {
                    item.append(el("span", { class: "value" }, node.value ? renderValue(node.value) : "—"));
                }
                list.append(item);
            }
        }
        return list;
    };
    const header = el("div", { class: "card-header" }, el("h2", {}, `${tree.root} ${tree.entityId}`), el("span", { class: `status-pill ${tree.status}` }, tree.status));
    const actions = el("div", { class: "card-actions" });
    if (state.mode === "edit") {
        actions.append(el("button", { onclick: async () => {
                const saved = await guard(() => api.edit(doc.id, savePayload(state).expectedRevision, savePayload(state).edits));
                if (saved) {
                    renderCard(doc.id, "edit");
                }
                else {
                    // a failed save keeps the buffer; a revision conflict shows a
                    // merge prompt instead of silently losing the edits
                    const banner = document.querySelector("#banner");
                    banner.append(el("button", { onclick: () => renderCard(doc.id, "edit") }, "reload latest revision (your buffer is kept on screen)"));
                }
            }, }, "save"), el("button", { onclick: () => renderCard(doc.id, "view") }, "view mode"));
    }
    else {
        actions.append(el("button", { onclick: () => renderCard(doc.id, "edit") }, "edit"), el("button", { onclick: async () => {
                await guard(() => api.transition(doc.id, "pending"));
                renderCard(doc.id, "view");
            } }, "request publish"));
    }
    actions.append(el("button", { onclick: () => {
            const panel = document.querySelector("#xmlmap");
            clear(panel).append(...xmlMap(schema).map(entry => el("div", { class: entry.group ? "map-group" : "map-field" }, entry.path)));
        } }, "XML map"));
    const footer = el("div", { class: "associations" }, el("h3", {}, "Associations"), el("h4", {}, "references"), ...tree.associations.references.map(r => el("div", {}, `${r.path} → `, el("a", { href: "#", onclick: (e) => {
            e.preventDefault();
            renderCard(r.id, "view");
        } }, `${r.label || r.id}`))), el("h4", {}, "referenced by"), ...tree.associations.referencedBy.map(r => el("div", {}, el("a", { href: "#", onclick: (e) => {
            e.preventDefault();
            renderCard(r.referrer, "view");
        } }, r.referrer), ` (${r.path})`)));
    clear(content).append(header, actions, renderNodes(tree.nodes), footer, el("div", { id: "xmlmap" }));
}
// ---- advanced search ---------------------------------------------------------------
async function renderSearchPanel() {
    const content = document.querySelector("#content");
    const schema = await guard(() => api.schema(currentType));
    if (!schema)
        return;
    const fields = queryableFields(schema);
    const selections = [];
    const results = el("div", { class: "results" });
    const selectionList = el("ul", {});
    const fieldPicker = el("select", {}, ...fields.map(f => el("option", { value: f.path }, `${f.label} (${f.kind})`)));
    const opPicker = el("select", {});
    const argInput = el("input", { placeholder: "value" });
    const refreshOps = () => {
        const field = fields.find(f => f.path === fieldPicker.value) ?? fields[0];
        clear(opPicker).append(...(field ? operatorsFor(field) : [])
            .map(op => el("option", { value: op }, op)));
    };
    fieldPicker.addEventListener("change", refreshOps);
    refreshOps();
    const addSelection = () => {
        const field = fields.find(f => f.path === fieldPicker.value);
        if (!field)
            return;
        const op = opPicker.value;
        let selection;
        if (op === "term_is")
            selection = { op, field, termId: argInput.value };
        else if (op === "links_to")
            selection = { op, field, entityId: argInput.value };
        else if (op === "date_within" || op === "date_overlaps") {
            selection = { op, field, expr: argInput.value };
        }
        else if (op === "equals" || op === "contains") {
            selection = { op, field, text: argInput.value };
        }
        else
            return;
        selections.push(selection);
        selectionList.append(el("li", {}, `${field.path} ${op} ${argInput.value}`));
    };
    const run = async () => {
        const predicates = buildQuery(selections);
        const out = await guard(() => api.advancedSearch(currentType, predicates));
        if (!out)
            return;
        clear(results).append(el("h3", {}, `${out.ids.length} results`), ...out.ids.map(id => el("div", {}, el("a", { href: "#", onclick: (e) => {
                e.preventDefault();
                renderCard(id, "view");
            } }, id))));
    };
    const queryName = el("input", { placeholder: "save as…" });
    const shared = el("input", { type: "checkbox" });
    const savedList = el("div", {});
    const refreshSaved = async () => {
        const queries = await guard(() => api.listQueries());
        if (!queries)
            return;
        clear(savedList).append(...queries.map(q => el("div", {}, `${q.name} (${q.type}) `, el("button", { onclick: async () => {
                const out = await guard(() => api.runQuery(q.id));
                if (out) {
                    clear(results).append(el("h3", {}, `${out.ids.length} results`), ...out.ids.map(id => el("div", {}, id)));
                }
            } }, "run"))));
    };
    clear(content).append(el("h2", {}, `Advanced search: ${currentType}`), el("div", { class: "builder" }, fieldPicker, opPicker, argInput, el("button", { onclick: addSelection }, "add condition"), el("button", { onclick: run }, "search")), selectionList, el("div", { class: "save-query" }, queryName, el("label", {}, shared, " share with organisation"), el("button", { onclick: async () => {
            await guard(() => api.saveQuery(queryName.value, currentType, buildQuery(selections), shared.checked));
            refreshSaved();
        } }, "save query")), savedList, results);
    refreshSaved();
}
// ---- vocabulary administration --------------------------------------------------------
async function renderVocabAdmin() {
    const content = document.querySelector("#content");
    const vocabularies = await guard(() => api.listVocabularies());
    if (!vocabularies)
        return;
    const detail = el("div", {});
    const show = async (vocabId) => {
        const vocab = await guard(() => api.vocabulary(vocabId));
        const duplicates = await guard(() => api.duplicateCandidates(vocabId));
        if (!vocab || !duplicates)
            return;
        const dupPanel = el("div", { class: "duplicates" }, el("h4", {}, "duplicate candidates"));
        for (const cluster of duplicates.clusters) {
            const winner = el("select", {}, ...cluster.map(t => el("option", { value: t }, t)));
            dupPanel.append(el("div", {}, cluster.join(" ~ "), winner, el("button", { onclick: async () => {
                    const losers = cluster.filter(t => t !== winner.value);
                    await guard(() => api.mergeTerms(vocabId, winner.value, losers));
                    show(vocabId);
                } }, "merge into selected")));
        }
        clear(detail).append(el("h3", {}, `${vocab.name} (${vocab.mode})`), el("ul", {}, ...vocab.terms.filter(t => !t.deprecated).map(t => el("li", {}, `${t.id}: ${Object.values(t.labels).join(" / ")}`))), dupPanel);
    };
    clear(content).append(el("h2", {}, "Vocabularies"), el("ul", {}, ...vocabularies.map(v => el("li", {}, el("button", { onclick: () => show(v.id) }, `${v.id} (${v.mode}, ${v.terms} terms)`)))), detail);
}
// ---- map panel -----------------------------------------------------------------------
async function renderMapPanel() {
    const content = document.querySelector("#content");
    const rows = await guard(() => api.rows(currentType));
    if (!rows)
        return;
    const ids = rows.map(r => r.id);
    const collection = await guard(() => api.mapFeatures(ids));
    if (!collection)
        return;
    const model = buildMapModel(collection);
    const svgHost = el("div", { class: "map-host" });
    svgHost.innerHTML = renderMapSvg(model);
    clear(content).append(el("h2", {}, `Map: ${currentType}`), svgHost, el("div", { class: "unresolved" }, el("h3", {}, `${model.unresolved.length} without coordinates`), ...model.unresolved.map(u => el("div", {}, `${u.entity}: ${u.reason}`))));
}
// ---- boot ------------------------------------------------------------------------------
renderLogin();
