// Documentation-card view model: the tree of groups and fields rendered
// from a schema plus one entity's values. Pure functions over JSON
// payloads so every behavior is testable without a DOM.
import { isGroup } from "./types.js";
const WIDGETS = {
    "text-plain": "text-input",
    "text-formatted": "richtext-editor",
    "number": "number-input",
    "time-expression": "time-input",
    "vocab-term": "term-picker",
    "thesaurus-term": "concept-picker",
    "entity-link": "entity-picker",
    "geo-coordinates": "map-picker",
    "geo-external-id": "gazetteer-picker",
    "digital-file": "file-upload",
};
function stripIndices(path) {
    return path.split("/").map(seg => seg.replace(/\[\d+\]$/, "")).join("/");
}
/** Group instance paths that contain at least one filled field: every
 * proper prefix of every value path. */
export function filledGroupPaths(doc) {
    const filled = new Set();
    for (const path of Object.keys(doc.values)) {
        const segments = path.split("/");
        for (let depth = 1; depth < segments.length; depth++) {
            filled.add(segments.slice(0, depth).join("/"));
        }
    }
    return filled;
}
/** View-mode default: exactly the groups containing filled fields. */
export function defaultExpansion(doc) {
    return filledGroupPaths(doc);
}
export function newCardViewState(doc, mode = "view") {
    return {
        entityId: doc.id,
        mode,
        expansion: defaultExpansion(doc),
        dirtyEdits: [],
        revisionSeen: doc.revision,
    };
}
function instancesUnder(doc, parentInstance, name) {
    const family = parentInstance ? `${parentInstance}/${name}` : name;
    const depth = family.split("/").length;
    const seen = new Set();
    for (const path of Object.keys(doc.values)) {
        const segments = path.split("/");
        if (segments.length < depth)
            continue;
        const prefix = segments.slice(0, depth).join("/");
        const parent = segments.slice(0, depth - 1).join("/");
        if (parent !== parentInstance)
            continue;
        const match = new RegExp(`^${name}\\[(\\d+)\\]$`).exec(segments[depth - 1]);
        if (match)
            seen.add(parseInt(match[1], 10));
    }
    return [...seen].sort((a, b) => a - b);
}
function fieldCard(field, path, doc, state, canAdd) {
    return {
        kind: "field",
        path,
        name: field.field,
        label: field.label,
        widget: WIDGETS[field.kind] ?? "text-input",
        fieldKind: field.kind,
        required: field.required,
        value: doc.values[path] ?? null,
        targets: field.targets,
        vocab: field.vocab,
        vocabMode: field.mode,
        thesaurus: field.thesaurus,
        canAddInstance: canAdd,
    };
}
function renderChildren(nodes, parentInstance, doc, state) {
    const out = [];
    const editing = state.mode === "edit";
    for (const node of nodes) {
        const name = isGroup(node) ? node.group : node.field;
        const base = parentInstance ? `${parentInstance}/${name}` : name;
        if (isGroup(node)) {
            if (node.multiple) {
                const indices = instancesUnder(doc, parentInstance, node.group);
                const shown = indices.length ? indices : [1];
                shown.forEach((index, position) => {
                    const path = `${base}[${index}]`;
                    out.push({
                        kind: "group",
                        path,
                        name: node.group,
                        multiple: true,
                        expanded: state.expansion.has(path),
                        children: renderChildren(node.children, path, doc, state),
                        canAddInstance: editing && position === shown.length - 1,
                    });
                });
            }
            else {
                out.push({
                    kind: "group",
                    path: base,
                    name: node.group,
                    multiple: false,
                    expanded: state.expansion.has(base),
                    children: renderChildren(node.children, base, doc, state),
                    canAddInstance: false,
                });
            }
        }
        else if (node.multiple) {
            const indices = instancesUnder(doc, parentInstance, node.field);
            const shown = indices.length ? indices : [1];
            shown.forEach((index, position) => {
                out.push(fieldCard(node, `${base}[${index}]`, doc, state, editing && position === shown.length - 1));
            });
        }
        else {
            out.push(fieldCard(node, base, doc, state, false));
        }
    }
    return out;
}
export function outboundLinks(doc) {
    const references = [];
    for (const [path, value] of Object.entries(doc.values).sort()) {
        if (value.kind === "link") {
            references.push({ path, type: value.type, id: value.id, label: value.label });
        }
    }
    return references;
}
/** The full card: root is the entity type, leaves are documentation
 * fields, the footer lists both association directions. */
export function renderCardTree(doc, schema, state, backlinks = []) {
    return {
        root: schema.type,
        entityId: doc.id,
        status: doc.status,
        nodes: renderChildren(schema.root.children, "", doc, state),
        associations: { references: outboundLinks(doc), referencedBy: backlinks },
    };
}
/** The full field hierarchy (index-free), for the card's XML map panel. */
export function xmlMap(schema) {
    const out = [];
    const walk = (nodes, prefix) => {
        for (const node of nodes) {
            const name = isGroup(node) ? node.group : node.field;
            const path = prefix ? `${prefix}/${name}` : name;
            out.push({ path, group: isGroup(node) });
            if (isGroup(node))
                walk(node.children, path);
        }
    };
    walk(schema.root.children, "");
    return out;
}
function findGroup(schema, freePath) {
    let nodes = schema.root.children;
    let found = null;
    for (const name of freePath.split("/")) {
        const next = nodes.find(n => (isGroup(n) ? n.group : n.field) === name);
        if (!next || !isGroup(next))
            return null;
        found = next;
        nodes = next.children;
    }
    return found;
}
/** Duplicate the whole structure of a multiple group as a fresh, empty
 * instance: the next index after the ones present. */
export function addInstance(doc, schema, state, familyInstancePath) {
    const freePath = stripIndices(familyInstancePath);
    const group = findGroup(schema, freePath);
    if (!group || !group.multiple) {
        throw new Error(`${freePath} is not a multiple group`);
    }
    const segments = familyInstancePath.split("/");
    const parentInstance = segments.slice(0, -1).join("/");
    const name = segments[segments.length - 1].replace(/\[\d+\]$/, "");
    const existing = instancesUnder(doc, parentInstance, name);
    const next = existing.length ? existing[existing.length - 1] + 1 : 2;
    const path = parentInstance ? `${parentInstance}/${name}[${next}]`
        : `${name}[${next}]`;
    const subtree = renderChildren(group.children, path, doc, state);
    state.expansion.add(path);
    return { path, subtree };
}
/** Buffer an edit locally; the save payload carries them all at once
 * against the revision the user has seen. */
export function applyLocalEdit(state, path, value) {
    state.dirtyEdits = state.dirtyEdits.filter(e => e.path !== path);
    state.dirtyEdits.push({ path, value });
}
export function savePayload(state) {
    return { expectedRevision: state.revisionSeen, edits: state.dirtyEdits };
}
export function toggleExpansion(state, path) {
    if (state.expansion.has(path))
        state.expansion.delete(path);
    else
        state.expansion.add(path);
}
