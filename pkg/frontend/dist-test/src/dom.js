// Minimal element builder; keeps main.ts readable without a framework.
export function el(tag, attrs = {}, ...children) {
    const node = document.createElement(tag);
    for (const [name, value] of Object.entries(attrs)) {
        if (typeof value === "function") {
            node.addEventListener(name.replace(/^on/, ""), value);
        }
        else if (name === "class") {
            node.className = value;
        }
        else {
            node.setAttribute(name, value);
        }
    }
    for (const child of children) {
        node.append(child);
    }
    return node;
}
export function clear(node) {
    node.replaceChildren();
    return node;
}
