package org.owasp.benchmark.testcode;

import java.io.IOException;

import javax.servlet.ServletException;
import javax.servlet.annotation.WebServlet;
import javax.servlet.http.HttpServlet;
import javax.servlet.http.HttpServletRequest;
import javax.servlet.http.HttpServletResponse;

@WebServlet(value = "/ldapi-00/BenchmarkTest00029")
public class BenchmarkTest00029 extends HttpServlet {

    private static final long serialVersionUID = 1L;

    private final java.util.Properties benchprops =
            org.owasp.benchmark.helpers.Utils.loadBenchmarkProperties();

    @Override
    public void doGet(HttpServletRequest request, HttpServletResponse response)
            throws ServletException, IOException {
        doPost(request, response);
    }

    @Override
    public void doPost(HttpServletRequest request, HttpServletResponse response)
            throws ServletException, IOException {
        response.setContentType("text/html;charset=UTF-8");

        javax.naming.directory.DirContext dirContext = org.owasp.benchmark.helpers.LDAPManager.getDirContext();
        javax.naming.directory.SearchControls searchControls = new javax.naming.directory.SearchControls();
        String param = request.getParameter("uid") + request.getParameter("department");
        String filter = "(uid=" + param + ")";
        javax.naming.NamingEnumeration<?> matches = dirContext.search("ou=users", filter, searchControls);
        response.getWriter().println("found=" + matches.hasMore());
    }
}
