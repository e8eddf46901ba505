// Payload shapes of the /api/v1 surface.
export function isGroup(node) {
    return node.group !== undefined;
}
